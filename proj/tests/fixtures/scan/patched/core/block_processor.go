package core

import (
	"fmt"
	"math/big"

	"github.com/ethereum/go-ethereum/core/types"
)

// Validates the current block. Returns an error if the block was invalid,
// an uncle or anything that isn't on the current block chain.
func (sm *BlockProcessor) ValidateBlock(block, parent *types.Block) error {
	if len(block.Header().Extra) > 1024 {
		return fmt.Errorf("Block extra data too long (%d)", len(block.Header().Extra))
	}

	expd := CalcDifficulty(block, parent)
	if expd.Cmp(block.Header().Difficulty) != 0 {
		return fmt.Errorf("Difficulty check failed for block %v, %v", block.Header().Difficulty, expd)
	}

	expl := CalcGasLimit(parent, block)
	if expl.Cmp(block.Header().GasLimit) != 0 {
		return fmt.Errorf("GasLimit check failed for block %v, %v", block.Header().GasLimit, expl)
	}

	if block.Time() < parent.Time() {
		return ValidationError("Block timestamp not after prev block (%v - %v)", block.Header().Time, parent.Header().Time)
	}

	if block.Time() > time.Now().Unix() {
		return BlockFutureErr
	}

	if new(big.Int).Sub(block.Number(), parent.Number()).Cmp(big.NewInt(1)) != 0 {
		return BlockNumberErr
	}

	// Verify the nonce of the block. Return an error if it's not valid
	if !sm.Pow.Verify(block) {
		return ValidationError("Block's nonce is invalid (= %x)", block.Header().Nonce)
	}

	return nil
}
