#include "pdmp/fortet_mourier.hpp"

#include "pdmp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace pdmp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Successive shortest paths with Dijkstra on reduced costs.
class MinCostFlow {
 public:
  explicit MinCostFlow(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

  void add_arc(int from, int to, double cap, double cost) {
    adj_[from].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({to, cap, cost});
    adj_[to].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({from, 0.0, -cost});
  }

  // Pushes up to `amount` from s to t; returns the total cost.
  double run(int s, int t, double amount) {
    const auto n = adj_.size();
    std::vector<double> potential(n, 0.0), dist(n);
    std::vector<int> via(n);
    std::vector<char> done(n);
    double total_cost = 0.0;
    double remaining = amount;
    const double eps = 1e-15 * std::max(1.0, amount);
    using Item = std::pair<double, int>;
    while (remaining > eps) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(via.begin(), via.end(), -1);
      std::fill(done.begin(), done.end(), 0);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[s] = 0.0;
      heap.push({0.0, s});
      while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (u == t) break;
        for (int a : adj_[u]) {
          const Arc& arc = arcs_[a];
          if (arc.cap <= eps) continue;
          const double reduced = std::max(0.0, arc.cost + potential[u] - potential[arc.to]);
          if (d + reduced < dist[arc.to]) {
            dist[arc.to] = d + reduced;
            via[arc.to] = a;
            heap.push({dist[arc.to], arc.to});
          }
        }
      }
      if (!done[t]) fail(ErrorCode::PreconditionViolation, "fortet_mourier: transport problem infeasible");
      const double dt = dist[t];
      for (std::size_t v = 0; v < n; ++v) potential[v] += std::min(dist[v], dt);
      double push = remaining;
      for (int v = t; v != s; v = arcs_[via[v] ^ 1].to) push = std::min(push, arcs_[via[v]].cap);
      for (int v = t; v != s; v = arcs_[via[v] ^ 1].to) {
        arcs_[via[v]].cap -= push;
        arcs_[via[v] ^ 1].cap += push;
        total_cost += push * arcs_[via[v]].cost;
      }
      remaining -= push;
    }
    return total_cost;
  }

 private:
  struct Arc {
    int to;
    double cap;
    double cost;
  };
  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
};

}  // namespace

double fortet_mourier(const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2, double c, std::size_t support_cap) {
  require(c > 0.0, "fortet_mourier: c must be positive");
  std::vector<HybridState> atoms = mu1.atoms();
  std::vector<double> signed_w = mu1.weights();
  atoms.insert(atoms.end(), mu2.atoms().begin(), mu2.atoms().end());
  for (double w : mu2.weights()) signed_w.push_back(-w);
  // Merge identical atoms by summing their signed weights.
  std::vector<std::size_t> order(atoms.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  auto less = [&](std::size_t a, std::size_t b) {
    const auto& x = atoms[a];
    const auto& y = atoms[b];
    if (x.flow != y.flow) return x.flow < y.flow;
    return std::lexicographical_compare(x.y.data(), x.y.data() + x.y.size(), y.y.data(), y.y.data() + y.y.size());
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<HybridState> nodes;
  std::vector<double> supply;
  for (auto k : order) {
    if (!nodes.empty() && nodes.back() == atoms[k]) {
      supply.back() += signed_w[k];
    } else {
      nodes.push_back(atoms[k]);
      supply.push_back(signed_w[k]);
    }
  }
  if (nodes.size() > support_cap) {
    std::ostringstream msg;
    msg << "combined support " << nodes.size() << " exceeds the cap " << support_cap << "; subsample first";
    fail(ErrorCode::SupportTooLarge, msg.str());
  }
  const int n = static_cast<int>(nodes.size());
  const int ground = n, source = n + 1, sink = n + 2;
  MinCostFlow flow(n + 3);
  double amount = 0.0;
  for (int u = 0; u < n; ++u) {
    if (supply[u] > 0) {
      flow.add_arc(source, u, supply[u], 0.0);
      amount += supply[u];
    } else if (supply[u] < 0) {
      flow.add_arc(u, sink, -supply[u], 0.0);
    }
    flow.add_arc(u, ground, kInf, 1.0);
    flow.add_arc(ground, u, kInf, 1.0);
  }
  if (amount <= 0.0) return 0.0;

  const int dim = static_cast<int>(nodes.front().y.size());
  if (dim == 1) {
    // Nodes are sorted by (flow, y): each flow's atoms form a contiguous run.
    std::vector<int> run_start;
    for (int u = 0; u < n; ++u)
      if (u == 0 || nodes[u].flow != nodes[u - 1].flow) run_start.push_back(u);
    run_start.push_back(n);
    for (std::size_t r = 0; r + 1 < run_start.size(); ++r) {
      for (int u = run_start[r]; u + 1 < run_start[r + 1]; ++u) {
        const double d = nodes[u + 1].y(0) - nodes[u].y(0);
        if (d < 2.0) {
          flow.add_arc(u, u + 1, kInf, d);
          flow.add_arc(u + 1, u, kInf, d);
        }
      }
    }
    if (c < 2.0) {
      // Cross-flow moves: to the nearest atom below and above in every other
      // flow; the rest of the route runs along that flow's chain.
      for (int u = 0; u < n; ++u) {
        for (std::size_t r = 0; r + 1 < run_start.size(); ++r) {
          const int lo = run_start[r], hi = run_start[r + 1];
          if (nodes[lo].flow == nodes[u].flow) continue;
          const double y = nodes[u].y(0);
          auto it = std::lower_bound(nodes.begin() + lo, nodes.begin() + hi, y,
                                     [](const HybridState& x, double v) { return x.y(0) < v; });
          const int above = static_cast<int>(it - nodes.begin());
          for (int w : {above - 1, above}) {
            if (w < lo || w >= hi) continue;
            const double cost = std::abs(nodes[w].y(0) - y) + c;
            if (cost < 2.0) {
              flow.add_arc(u, w, kInf, cost);
              flow.add_arc(w, u, kInf, cost);
            }
          }
        }
      }
    }
  } else {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) {
        const double cost = rho_c(nodes[u], nodes[v], c);
        if (cost < 2.0) {
          flow.add_arc(u, v, kInf, cost);
          flow.add_arc(v, u, kInf, cost);
        }
      }
  }
  return std::max(0.0, flow.run(source, sink, amount));
}

}  // namespace pdmp
