package downloader

import (
	"github.com/ethereum/go-ethereum/core/types"
)

// deliverBodies injects block bodies retrieved from the network into the
// result cache, stopping at the first body that does not match its header.
func (q *queue) deliverBodies(headers []*types.Header, txLists [][]*types.Transaction, uncleLists [][]*types.Header) (int, error) {
	q.lock.Lock()
	defer q.lock.Unlock()

	accepted := 0
	for i, header := range headers {
		if i >= len(txLists) || i >= len(uncleLists) {
			break
		}
		index := int(header.Number.Int64() - int64(q.resultOffset))
		if index >= len(q.resultCache) || index < 0 {
			return accepted, errInvalidChain
		}
		q.resultCache[index].Transactions = txLists[i]
		q.resultCache[index].Uncles = uncleLists[i]
		accepted++
	}
	return accepted, nil
}
