#pragma once

#include <cstddef>
#include <vector>

namespace pfsa {

// Tarjan's strongly connected components over an adjacency list.
// Components are returned in reverse topological order of the condensation
// (sink components first); vertices within a component are in discovery order.
inline std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), lowlink(n, 0), on_stack(n, 0), stack;
  std::vector<std::vector<int>> components;
  int next_index = 0;

  // Explicit stack of (vertex, next edge position) to avoid recursion limits.
  struct Frame {
    int v;
    std::size_t edge;
  };
  std::vector<Frame> call;

  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = lowlink[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        int w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = lowlink[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          if (index[w] < lowlink[f.v]) lowlink[f.v] = index[w];
        }
      } else {
        int v = f.v;
        call.pop_back();
        if (!call.empty() && lowlink[v] < lowlink[call.back().v])
          lowlink[call.back().v] = lowlink[v];
        if (lowlink[v] == index[v]) {
          std::vector<int> comp;
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp.push_back(w);
          } while (w != v);
          components.push_back(std::move(comp));
        }
      }
    }
  }
  return components;
}

inline bool is_single_scc(const std::vector<std::vector<int>>& adj) {
  auto comps = strongly_connected_components(adj);
  return comps.size() == 1 && comps.front().size() == adj.size();
}

}  // namespace pfsa
