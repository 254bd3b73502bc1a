package xeth

import (
	"github.com/ethereum/go-ethereum/common"
	"github.com/ethereum/go-ethereum/core/types"
)

func (self *XEth) getBlockByHeight(height int64) *types.Block {
	var num uint64

	switch height {
	case -2:
		return self.backend.Miner().PendingBlock()
	case -1:
		return self.CurrentBlock()
	default:
		if height < 0 {
			return nil
		}
		num = uint64(height)
	}

	block := self.backend.ChainManager().GetBlockByNumber(num)
	if block != nil && block.Hash() != (common.Hash{}) {
		return block
	}
	return nil
}
