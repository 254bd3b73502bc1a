package ethapi

import (
	"context"

	"github.com/ethereum/go-ethereum/common/hexutil"
	"github.com/ethereum/go-ethereum/log"
	"github.com/ethereum/go-ethereum/rpc"
)

// EstimateGas returns an estimate of the amount of gas needed to execute the
// given transaction against the current pending block.
func (s *PublicBlockChainAPI) EstimateGas(ctx context.Context, args CallArgs) (hexutil.Uint64, error) {
	if gasCap := s.b.RPCGasCap(); gasCap != nil {
		if args.Gas != nil && uint64(*args.Gas) > gasCap.Uint64() {
			log.Warn("Applying cap on gas, caller requested amount above limit", "requested", uint64(*args.Gas), "cap", gasCap)
			newGas := hexutil.Uint64(gasCap.Uint64())
			args.Gas = &newGas
		}
	}
	blockNrOrHash := rpc.BlockNumberOrHashWithNumber(rpc.PendingBlockNumber)
	return DoEstimateGas(ctx, s.b, args, blockNrOrHash)
}
