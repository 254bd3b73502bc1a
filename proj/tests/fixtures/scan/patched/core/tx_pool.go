package core

import (
	"errors"
	"fmt"
	"math/big"

	"github.com/ethereum/go-ethereum/core/types"
)

var (
	ErrInvalidSender = errors.New("invalid sender")
	ErrNonce         = errors.New("nonce too low")
)

// validateTx checks whether a transaction is valid according to the consensus
// rules and adheres to some heuristic limits of the local node.
func (pool *TxPool) validateTx(tx *types.Transaction) error {
	// Validate the transaction sender and it's sig. Throw
	// if the from fields is invalid.
	from, err := tx.From()
	if err != nil || len(from) != 20 {
		return ErrInvalidSender
	}

	// Make sure the account exist. Non existent accounts
	// haven't got funds and well therefor never pass.
	currentState, err := pool.currentState()
	if err != nil {
		return err
	}
	if !currentState.HasAccount(tx.To()) {
		return ErrNonExistentAccount
	}

	// Last but not least check for nonce errors
	if currentState.GetNonce(tx.To()) > tx.Nonce() {
		return ErrNonce
	}

	// Check the transaction doesn't exceed the current
	// block limit gas.
	if pool.gasLimit().Cmp(tx.Gas()) < 0 {
		return ErrGasLimit
	}

	if tx.Value().Cmp(common.Big0) < 0 {
		return ErrNegativeValue
	}
	return nil
}
