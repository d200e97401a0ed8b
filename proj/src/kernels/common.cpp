#include <algorithm>
#include <functional>
#include <limits>
#include <queue>

#include "genmetric/kernels.hpp"

namespace genmetric::detail {

void dijkstra(const AdjacencyList& graph, int source, double* row) {
  const auto n = graph.size();
  std::fill(row, row + n, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  row[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [dist, u] = heap.top();
    heap.pop();
    if (dist > row[u]) continue;
    for (const auto& [v, w] : graph[static_cast<std::size_t>(u)]) {
      const double cand = dist + w;
      if (cand < row[v]) {
        row[v] = cand;
        heap.emplace(cand, v);
      }
    }
  }
}

}  // namespace genmetric::detail
