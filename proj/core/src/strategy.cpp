#include "qsynth/strategy.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace qsynth {

std::vector<ActionDef> enumerate_actions(const PartialProgram& p, const Thread& c, int loc,
                                         bool all_subsets) {
    const auto& outs = c.out[loc];
    int n = (int)outs.size();
    // pairwise disjointness matrix
    std::vector<std::vector<bool>> disj(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            disj[i][j] = disj[j][i] =
                guards_disjoint(p, *c.transitions[outs[i]].guard, *c.transitions[outs[j]].guard);

    std::vector<ActionDef> result;
    std::vector<int> subset;
    // enumerate disjoint subsets in lexicographic order of member indices
    std::function<void(int)> rec = [&](int start) {
        if (!subset.empty()) {
            bool maximal = true;
            if (!all_subsets) {
                for (int k = 0; k < n && maximal; ++k) {
                    if (std::find(subset.begin(), subset.end(), k) != subset.end()) continue;
                    bool fits = true;
                    for (int m : subset)
                        if (!disj[k][m]) {
                            fits = false;
                            break;
                        }
                    if (fits) maximal = false;
                }
            }
            if (all_subsets || maximal) {
                ActionDef a;
                for (int m : subset) a.transitions.push_back(outs[m]);
                result.push_back(std::move(a));
            }
        }
        for (int k = start; k < n; ++k) {
            bool fits = true;
            for (int m : subset)
                if (!disj[k][m]) {
                    fits = false;
                    break;
                }
            if (!fits) continue;
            subset.push_back(k);
            rec(k + 1);
            subset.pop_back();
        }
    };
    rec(0);
    return result;
}

std::string MemorylessStrategy::encode() const {
    std::string s;
    for (size_t i = 0; i < choice.size(); ++i) {
        if (i) s += ";";
        s += std::to_string(choice[i]);
    }
    return s;
}

std::vector<PartialStrategy> StrategyTree::children(const PartialStrategy& s) const {
    std::vector<PartialStrategy> out;
    int d = depth(s);
    if (d >= (int)obs_.size()) return out;
    for (int a = 0; a < obs_[d].num_actions; ++a) {
        PartialStrategy c = s;
        c.choice[d] = a;
        out.push_back(std::move(c));
    }
    return out;
}

uint64_t StrategyTree::leaf_count() const {
    uint64_t n = 1;
    for (const auto& o : obs_) {
        if (o.num_actions == 0) return 0;
        if (n > UINT64_MAX / (uint64_t)o.num_actions) return UINT64_MAX;
        n *= (uint64_t)o.num_actions;
    }
    return n;
}

std::vector<MemorylessStrategy> strategy_elimination(const StrategyTree& tree,
                                                     const PartialCheckFn& check,
                                                     EliminationStats* stats) {
    std::vector<MemorylessStrategy> candidates;
    std::deque<PartialStrategy> work{tree.root()};
    while (!work.empty()) {
        PartialStrategy s = std::move(work.front());
        work.pop_front();
        if (stats) stats->checks++;
        if (check(s)) {
            if (stats) stats->pruned_subtrees++;
            continue;
        }
        if (tree.is_leaf(s)) {
            candidates.push_back(MemorylessStrategy{s.choice});
            continue;
        }
        auto kids = tree.children(s);
        for (auto& k : kids) work.push_back(std::move(k));
    }
    // enumeration order of the tree is already lexicographic; keep it stable
    std::sort(candidates.begin(), candidates.end(),
              [](const MemorylessStrategy& a, const MemorylessStrategy& b) {
                  return a.choice < b.choice;
              });
    return candidates;
}

}  // namespace qsynth
