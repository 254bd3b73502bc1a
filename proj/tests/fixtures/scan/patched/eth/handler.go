package eth

import (
	"fmt"
	"math/big"

	"github.com/ethereum/go-ethereum/core/types"
)

func (pm *ProtocolManager) handleNewBlock(p *peer, request newBlockMsgData) error {
	hash := request.Block.Hash()
	p.blockHashes.Add(hash)

	if err := request.Block.ValidateFields(); err != nil {
		return errResp(ErrDecode, "block validation %v: %v", msg, err)
	}
	request.Block.ReceivedAt = msg.ReceivedAt

	// Verify the advertised total difficulty against what the block delivers
	if parent := pm.chainman.GetBlock(request.Block.ParentHash()); parent != nil {
		td := new(big.Int).Add(parent.Td, request.Block.Difficulty())
		if td.Cmp(request.TD) != 0 {
			return errResp(ErrInvalidTd, "peer %s advertised td %v, block delivers %v", p.id, request.TD, td)
		}
	}

	// Make sure the block has a reasonable total difficulty before importing
	if p.td.Cmp(request.TD) < 0 {
		p.td = request.TD
	}
	return pm.importBlock(p, request.Block, request.TD)
}
