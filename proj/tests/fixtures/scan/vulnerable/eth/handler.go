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

	// Make sure the block has a reasonable total difficulty before importing
	if p.td.Cmp(request.TD) < 0 {
		p.td = request.TD
	}
	return pm.importBlock(p, request.Block, request.TD)
}
