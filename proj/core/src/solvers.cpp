#include "qsynth/solvers.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>

namespace qsynth {

namespace {

// Iterative Tarjan. Returns component id per node; ids are assigned in
// completion order, so successors of a component always have smaller ids.
std::vector<int> tarjan_scc(const std::vector<std::vector<int>>& adj, int& ncomp) {
    int n = (int)adj.size();
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> onstack(n, 0);
    std::vector<int> stack;
    int next_index = 0;
    ncomp = 0;
    struct Frame {
        int v;
        size_t ei;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        onstack[root] = 1;
        while (!frames.empty()) {
            Frame& f = frames.back();
            if (f.ei < adj[f.v].size()) {
                int w = adj[f.v][f.ei++];
                if (index[w] < 0) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    onstack[w] = 1;
                    frames.push_back({w, 0});
                } else if (onstack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
            } else {
                int v = f.v;
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
                if (low[v] == index[v]) {
                    while (true) {
                        int w = stack.back();
                        stack.pop_back();
                        onstack[w] = 0;
                        comp[w] = ncomp;
                        if (w == v) break;
                    }
                    ncomp++;
                }
            }
        }
    }
    return comp;
}

std::vector<char> reachable_from(const std::vector<std::vector<int>>& adj, int s0) {
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> q{s0};
    seen[s0] = 1;
    while (!q.empty()) {
        int v = q.back();
        q.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = 1;
                q.push_back(w);
            }
    }
    return seen;
}

}  // namespace

WeightedTS to_wts(const MDP& m) {
    WeightedTS ts;
    ts.initial = m.initial;
    ts.succ.resize(m.states.size());
    ts.bad.resize(m.states.size(), 0);
    for (size_t s = 0; s < m.states.size(); ++s) {
        ts.bad[s] = m.states[s].bad;
        for (const auto& a : m.states[s].actions)
            for (const auto& e : a.edges) ts.succ[s].push_back({e.target, e.weight});
    }
    return ts;
}

bool unsafe_reachable(const MDP& m) {
    std::vector<std::vector<int>> adj(m.states.size());
    for (size_t s = 0; s < m.states.size(); ++s)
        for (const auto& a : m.states[s].actions)
            for (const auto& e : a.edges) adj[s].push_back(e.target);
    auto seen = reachable_from(adj, m.initial);
    for (size_t s = 0; s < m.states.size(); ++s)
        if (seen[s] && m.states[s].bad) return true;
    return false;
}

bool unsafe_reachable(const WeightedTS& ts) {
    std::vector<std::vector<int>> adj(ts.succ.size());
    for (size_t s = 0; s < ts.succ.size(); ++s)
        for (const auto& e : ts.succ[s]) adj[s].push_back(e.target);
    auto seen = reachable_from(adj, ts.initial);
    for (size_t s = 0; s < ts.succ.size(); ++s)
        if (seen[s] && ts.bad[s]) return true;
    return false;
}

ExtValue max_mean_cycle(const WeightedTS& ts) {
    if (unsafe_reachable(ts)) return ExtValue::infinity();
    int n = (int)ts.succ.size();
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s)
        for (const auto& e : ts.succ[s]) adj[s].push_back(e.target);
    auto seen = reachable_from(adj, ts.initial);
    int ncomp = 0;
    auto comp = tarjan_scc(adj, ncomp);

    std::optional<Rat> best;
    for (int c = 0; c < ncomp; ++c) {
        // gather reachable component members and internal edges
        std::vector<int> nodes;
        for (int v = 0; v < n; ++v)
            if (comp[v] == c && seen[v]) nodes.push_back(v);
        if (nodes.empty()) continue;
        std::vector<int> local(n, -1);
        for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = (int)i;
        struct E {
            int from, to;
            Rat w;
        };
        std::vector<E> edges;
        for (int v : nodes)
            for (const auto& e : ts.succ[v])
                if (comp[e.target] == c) edges.push_back({local[v], local[e.target], e.weight});
        if (edges.empty()) continue;
        int m = (int)nodes.size();
        // Karp: longest walks of each length from node 0
        std::vector<std::vector<std::optional<Rat>>> d(m + 1,
                                                       std::vector<std::optional<Rat>>(m));
        d[0][0] = Rat(0);
        for (int k = 1; k <= m; ++k)
            for (const auto& e : edges)
                if (d[k - 1][e.from]) {
                    Rat cand = *d[k - 1][e.from] + e.w;
                    if (!d[k][e.to] || cand > *d[k][e.to]) d[k][e.to] = cand;
                }
        for (int v = 0; v < m; ++v) {
            if (!d[m][v]) continue;
            std::optional<Rat> mn;
            for (int k = 0; k < m; ++k) {
                if (!d[k][v]) continue;
                Rat r = (*d[m][v] - *d[k][v]) / Rat(m - k);
                if (!mn || r < *mn) mn = r;
            }
            if (mn && (!best || *mn > *best)) best = *mn;
        }
    }
    if (!best) throw std::runtime_error("max_mean_cycle: no reachable cycle");
    return ExtValue(*best);
}

namespace linalg {

std::vector<Rat> sparse_solve(std::vector<std::vector<std::pair<int, Rat>>> in_rows,
                              std::vector<Rat> rhs) {
    int n = (int)in_rows.size();
    std::vector<std::map<int, Rat>> rows(n);
    for (int i = 0; i < n; ++i)
        for (auto& [c, v] : in_rows[i])
            if (v != 0) {
                auto [it, fresh] = rows[i].emplace(c, v);
                if (!fresh) {
                    it->second += v;
                    if (it->second == 0) rows[i].erase(it);
                }
            }
    std::vector<int> pivot_row(n, -1);
    std::vector<char> used(n, 0);
    for (int col = 0; col < n; ++col) {
        int best = -1;
        size_t best_sz = 0;
        for (int r = 0; r < n; ++r) {
            if (used[r]) continue;
            auto it = rows[r].find(col);
            if (it == rows[r].end()) continue;
            if (best < 0 || rows[r].size() < best_sz) {
                best = r;
                best_sz = rows[r].size();
            }
        }
        if (best < 0) throw std::runtime_error("sparse_solve: singular system");
        used[best] = 1;
        pivot_row[col] = best;
        const Rat pv = rows[best][col];
        for (int r = 0; r < n; ++r) {
            if (used[r]) continue;
            auto it = rows[r].find(col);
            if (it == rows[r].end()) continue;
            Rat factor = it->second / pv;
            rows[r].erase(it);
            for (const auto& [c, v] : rows[best]) {
                if (c == col) continue;
                Rat delta = v * factor;
                auto [jt, fresh] = rows[r].emplace(c, -delta);
                if (!fresh) {
                    jt->second -= delta;
                    if (jt->second == 0) rows[r].erase(jt);
                }
            }
            rhs[r] -= rhs[best] * factor;
        }
    }
    std::vector<Rat> x(n, Rat(0));
    for (int col = n - 1; col >= 0; --col) {
        int r = pivot_row[col];
        Rat acc = rhs[r];
        for (const auto& [c, v] : rows[r])
            if (c != col) acc -= v * x[c];
        x[col] = acc / rows[r][col];
    }
    return x;
}

}  // namespace linalg

std::vector<Rat> gaussian_stationary(const SparseChain& chain) {
    int n = (int)chain.size();
    // balance equation per state j: sum_i P(i,j) pi_i - pi_j = 0;
    // equation 0 replaced by normalization sum_i pi_i = 1
    std::vector<std::vector<std::pair<int, Rat>>> rows(n);
    std::vector<Rat> rhs(n, Rat(0));
    for (int i = 0; i < n; ++i) rows[0].push_back({i, Rat(1)});
    rhs[0] = Rat(1);
    for (int i = 0; i < n; ++i)
        for (const auto& [j, p] : chain[i])
            if (j != 0) rows[j].push_back({i, p});
    for (int j = 1; j < n; ++j) rows[j].push_back({j, Rat(-1)});
    return linalg::sparse_solve(std::move(rows), std::move(rhs));
}

std::vector<Rat> stationary_forward_prop(const SparseChain& chain) {
    int n = (int)chain.size();
    if (n == 1) return {Rat(1)};

    // DFS from 0: classify back edges (edge to a state still on the stack)
    // and record reverse finish order, a topological order of the rest.
    std::vector<char> color(n, 0);  // 0 white, 1 gray, 2 black
    struct EdgeRef {
        int from, to;
        Rat p;
        bool back;
    };
    std::vector<EdgeRef> edges;
    std::vector<int> order;
    {
        struct Frame {
            int v;
            size_t ei;
        };
        std::vector<Frame> st{{0, 0}};
        color[0] = 1;
        while (!st.empty()) {
            Frame& f = st.back();
            if (f.ei < chain[f.v].size()) {
                auto [w, p] = chain[f.v][f.ei++];
                bool back = color[w] == 1;
                edges.push_back({f.v, w, p, back});
                if (color[w] == 0) {
                    color[w] = 1;
                    st.push_back({w, 0});
                }
            } else {
                color[f.v] = 2;
                order.push_back(f.v);
                st.pop_back();
            }
        }
        std::reverse(order.begin(), order.end());
    }
    for (int v = 0; v < n; ++v)
        if (color[v] != 2) throw std::runtime_error("stationary_forward_prop: not irreducible");

    std::vector<int> var_of(n, -1);
    std::vector<int> sources;
    for (const auto& e : edges)
        if (e.back && var_of[e.from] < 0) {
            var_of[e.from] = (int)sources.size();
            sources.push_back(e.from);
        }
    int k = (int)sources.size();
    if (k == 0 || k > 64) return gaussian_stationary(chain);

    // in-edge lists
    std::vector<std::vector<const EdgeRef*>> in(n);
    for (const auto& e : edges) in[e.to].push_back(&e);

    // forward substitution: each state's stationary weight as a linear form
    // in the source variables
    std::vector<std::vector<Rat>> inflow(n, std::vector<Rat>(k, Rat(0)));
    auto val_of = [&](int u, const std::vector<std::vector<Rat>>& flows) -> std::vector<Rat> {
        if (var_of[u] >= 0) {
            std::vector<Rat> e(k, Rat(0));
            e[var_of[u]] = Rat(1);
            return e;
        }
        return flows[u];
    };
    for (int v : order) {
        for (const EdgeRef* e : in[v]) {
            auto uval = val_of(e->from, inflow);
            for (int i = 0; i < k; ++i)
                if (uval[i] != 0) inflow[v][i] += uval[i] * e->p;
        }
    }

    // residual system: x_b = inflow(b), plus normalization sum val(v) = 1
    int rows_n = k + 1;
    std::vector<std::vector<Rat>> A(rows_n, std::vector<Rat>(k, Rat(0)));
    std::vector<Rat> b(rows_n, Rat(0));
    for (int i = 0; i < k; ++i) {
        A[i][i] = Rat(1);
        for (int j = 0; j < k; ++j) A[i][j] -= inflow[sources[i]][j];
        b[i] = Rat(0);
    }
    for (int v = 0; v < n; ++v) {
        auto val = val_of(v, inflow);
        for (int j = 0; j < k; ++j) A[k][j] += val[j];
    }
    b[k] = Rat(1);

    // dense elimination tolerating one redundant row
    std::vector<int> prow(k, -1);
    std::vector<char> used(rows_n, 0);
    for (int col = 0; col < k; ++col) {
        int pick = -1;
        for (int r = 0; r < rows_n; ++r)
            if (!used[r] && A[r][col] != 0) {
                pick = r;
                break;
            }
        if (pick < 0) return gaussian_stationary(chain);
        used[pick] = 1;
        prow[col] = pick;
        for (int r = 0; r < rows_n; ++r) {
            if (r == pick || A[r][col] == 0) continue;
            Rat f = A[r][col] / A[pick][col];
            for (int j = 0; j < k; ++j) A[r][j] -= f * A[pick][j];
            b[r] -= f * b[pick];
        }
    }
    for (int r = 0; r < rows_n; ++r)
        if (!used[r] && b[r] != 0) return gaussian_stationary(chain);
    std::vector<Rat> x(k);
    for (int col = 0; col < k; ++col) x[col] = b[prow[col]] / A[prow[col]][col];

    std::vector<Rat> pi(n);
    for (int v = 0; v < n; ++v) {
        auto val = val_of(v, inflow);
        Rat acc(0);
        for (int j = 0; j < k; ++j) acc += val[j] * x[j];
        pi[v] = acc;
    }
    return pi;
}

namespace {

struct ChainView {
    SparseChain succ;          // probabilities
    std::vector<Rat> reward;   // expected one-step weight
};

ChainView chain_of_policy(const MDP& m, const std::vector<int>& policy) {
    ChainView cv;
    cv.succ.resize(m.states.size());
    cv.reward.assign(m.states.size(), Rat(0));
    for (size_t s = 0; s < m.states.size(); ++s) {
        const auto& a = m.states[s].actions[policy[s]];
        for (const auto& e : a.edges) {
            cv.succ[s].push_back({e.target, e.prob});
            cv.reward[s] += e.prob * e.weight;
        }
    }
    return cv;
}

struct GainBias {
    std::vector<Rat> gain, bias;
};

// Exact gain/bias for a Markov chain with rewards. Bias is pinned to 0 at
// one reference state per bottom component.
GainBias evaluate_chain(const ChainView& cv) {
    int n = (int)cv.succ.size();
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s)
        for (const auto& [t, _] : cv.succ[s]) adj[s].push_back(t);
    int ncomp = 0;
    auto comp = tarjan_scc(adj, ncomp);
    std::vector<char> bottom(ncomp, 1);
    for (int s = 0; s < n; ++s)
        for (int t : adj[s])
            if (comp[t] != comp[s]) bottom[comp[s]] = 0;

    GainBias gb;
    gb.gain.assign(n, Rat(0));
    gb.bias.assign(n, Rat(0));
    std::vector<char> recurrent(n, 0);

    for (int c = 0; c < ncomp; ++c) {
        if (!bottom[c]) continue;
        std::vector<int> nodes;
        for (int v = 0; v < n; ++v)
            if (comp[v] == c) nodes.push_back(v);
        std::vector<int> local(n, -1);
        for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = (int)i;
        SparseChain sub(nodes.size());
        for (size_t i = 0; i < nodes.size(); ++i)
            for (const auto& [t, p] : cv.succ[nodes[i]]) sub[i].push_back({local[t], p});
        auto pi = stationary_forward_prop(sub);
        Rat g(0);
        for (size_t i = 0; i < nodes.size(); ++i) g += pi[i] * cv.reward[nodes[i]];
        for (int v : nodes) {
            gb.gain[v] = g;
            recurrent[v] = 1;
        }
        // bias within the class: (I - P) h = r - g with h(ref) = 0; drop the
        // reference row and column
        int m = (int)nodes.size();
        if (m > 1) {
            std::vector<std::vector<std::pair<int, Rat>>> rows(m - 1);
            std::vector<Rat> rhs(m - 1);
            for (int i = 1; i < m; ++i) {
                rows[i - 1].push_back({i - 1, Rat(1)});
                for (const auto& [t, p] : sub[i])
                    if (t != 0) rows[i - 1].push_back({t - 1, -p});
                rhs[i - 1] = cv.reward[nodes[i]] - g;
            }
            auto h = linalg::sparse_solve(std::move(rows), std::move(rhs));
            for (int i = 1; i < m; ++i) gb.bias[nodes[i]] = h[i - 1];
        }
    }

    // transient states
    std::vector<int> trans;
    for (int v = 0; v < n; ++v)
        if (!recurrent[v]) trans.push_back(v);
    if (!trans.empty()) {
        std::vector<int> tlocal(n, -1);
        for (size_t i = 0; i < trans.size(); ++i) tlocal[trans[i]] = (int)i;
        int m = (int)trans.size();
        // gains: (I - Q) g_T = P(T -> rec) g_rec
        std::vector<std::vector<std::pair<int, Rat>>> rows(m);
        std::vector<Rat> rhs(m, Rat(0));
        for (int i = 0; i < m; ++i) {
            rows[i].push_back({i, Rat(1)});
            for (const auto& [t, p] : cv.succ[trans[i]]) {
                if (tlocal[t] >= 0)
                    rows[i].push_back({tlocal[t], -p});
                else
                    rhs[i] += p * gb.gain[t];
            }
        }
        auto rows2 = rows;  // same matrix for the bias system
        auto g = linalg::sparse_solve(std::move(rows), std::move(rhs));
        for (int i = 0; i < m; ++i) gb.gain[trans[i]] = g[i];
        // bias: (I - Q) h_T = r - g + P(T -> rec) h_rec
        std::vector<Rat> rhs2(m);
        for (int i = 0; i < m; ++i) {
            rhs2[i] = cv.reward[trans[i]] - gb.gain[trans[i]];
            for (const auto& [t, p] : cv.succ[trans[i]])
                if (tlocal[t] < 0) rhs2[i] += p * gb.bias[t];
        }
        auto h = linalg::sparse_solve(std::move(rows2), std::move(rhs2));
        for (int i = 0; i < m; ++i) gb.bias[trans[i]] = h[i];
    }
    return gb;
}

MDP restrict_reachable(const MDP& m, std::vector<int>* old_of_new = nullptr) {
    std::vector<std::vector<int>> adj(m.states.size());
    for (size_t s = 0; s < m.states.size(); ++s)
        for (const auto& a : m.states[s].actions)
            for (const auto& e : a.edges) adj[s].push_back(e.target);
    auto seen = reachable_from(adj, m.initial);
    std::vector<int> map(m.states.size(), -1);
    MDP out;
    for (size_t s = 0; s < m.states.size(); ++s)
        if (seen[s]) {
            map[s] = (int)out.states.size();
            out.states.push_back(m.states[s]);
            if (old_of_new) old_of_new->push_back((int)s);
        }
    out.initial = map[m.initial];
    for (auto& st : out.states)
        for (auto& a : st.actions)
            for (auto& e : a.edges) e.target = map[e.target];
    return out;
}

}  // namespace

ExtValue mc_value(const MDP& chain_in) {
    if (unsafe_reachable(chain_in)) return ExtValue::infinity();
    MDP chain = restrict_reachable(chain_in);
    for (const auto& s : chain.states)
        if (s.actions.size() != 1) throw std::runtime_error("mc_value: not a Markov chain");
    auto cv = chain_of_policy(chain, std::vector<int>(chain.states.size(), 0));

    int n = (int)cv.succ.size();
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s)
        for (const auto& [t, _] : cv.succ[s]) adj[s].push_back(t);
    int ncomp = 0;
    auto comp = tarjan_scc(adj, ncomp);
    std::vector<char> bottom(ncomp, 1);
    for (int s = 0; s < n; ++s)
        for (int t : adj[s])
            if (comp[t] != comp[s]) bottom[comp[s]] = 0;

    std::vector<Rat> comp_gain(ncomp, Rat(0));
    std::vector<char> recurrent(n, 0);
    for (int c = 0; c < ncomp; ++c) {
        if (!bottom[c]) continue;
        std::vector<int> nodes;
        for (int v = 0; v < n; ++v)
            if (comp[v] == c) nodes.push_back(v);
        std::vector<int> local(n, -1);
        for (size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = (int)i;
        SparseChain sub(nodes.size());
        for (size_t i = 0; i < nodes.size(); ++i)
            for (const auto& [t, p] : cv.succ[nodes[i]]) sub[i].push_back({local[t], p});
        auto pi = stationary_forward_prop(sub);
        for (size_t i = 0; i < nodes.size(); ++i) comp_gain[c] += pi[i] * cv.reward[nodes[i]];
        for (int v : nodes) recurrent[v] = 1;
    }

    if (recurrent[chain.initial]) return ExtValue(comp_gain[comp[chain.initial]]);

    std::vector<int> trans;
    std::vector<int> tlocal(n, -1);
    for (int v = 0; v < n; ++v)
        if (!recurrent[v]) {
            tlocal[v] = (int)trans.size();
            trans.push_back(v);
        }
    int m = (int)trans.size();
    std::vector<std::vector<std::pair<int, Rat>>> rows(m);
    std::vector<Rat> rhs(m, Rat(0));
    for (int i = 0; i < m; ++i) {
        rows[i].push_back({i, Rat(1)});
        for (const auto& [t, p] : cv.succ[trans[i]]) {
            if (tlocal[t] >= 0)
                rows[i].push_back({tlocal[t], -p});
            else
                rhs[i] += p * comp_gain[comp[t]];
        }
    }
    auto val = linalg::sparse_solve(std::move(rows), std::move(rhs));
    return ExtValue(val[tlocal[chain.initial]]);
}

MdpSolution mdp_strategy_improvement(const MDP& m_in) {
    if (unsafe_reachable(m_in)) return {ExtValue::infinity(), {}};
    MDP m = restrict_reachable(m_in);
    int n = (int)m.states.size();
    std::vector<int> policy(n, 0);

    for (int iter = 0;; ++iter) {
        if (iter > 1'000'000) throw std::runtime_error("strategy improvement diverged");
        auto cv = chain_of_policy(m, policy);
        auto gb = evaluate_chain(cv);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            const auto& acts = m.states[s].actions;
            // stage 1: gain improvement
            int best_a = policy[s];
            Rat best_g = gb.gain[s];
            for (int a = 0; a < (int)acts.size(); ++a) {
                Rat qg(0);
                for (const auto& e : acts[a].edges) qg += e.prob * gb.gain[e.target];
                if (qg > best_g) {
                    best_g = qg;
                    best_a = a;
                }
            }
            if (best_a != policy[s]) {
                policy[s] = best_a;
                changed = true;
                continue;
            }
            // stage 2: bias improvement among gain-preserving actions
            Rat cur_h = gb.bias[s];
            int best_ha = policy[s];
            Rat best_h = cur_h;
            for (int a = 0; a < (int)acts.size(); ++a) {
                Rat qg(0), r(0);
                for (const auto& e : acts[a].edges) {
                    qg += e.prob * gb.gain[e.target];
                    r += e.prob * e.weight;
                }
                if (qg != gb.gain[s]) continue;
                Rat qh = r - gb.gain[s];
                for (const auto& e : acts[a].edges) qh += e.prob * gb.bias[e.target];
                if (qh > best_h) {
                    best_h = qh;
                    best_ha = a;
                }
            }
            if (best_ha != policy[s]) {
                policy[s] = best_ha;
                changed = true;
            }
        }
        if (!changed) return {ExtValue(gb.gain[m.initial]), policy};
    }
}

}  // namespace qsynth
