#include "qsynth/perf.hpp"

#include <algorithm>

namespace qsynth {

int PerformanceAutomaton::find_state(const std::string& name) const {
    for (size_t i = 0; i < states.size(); ++i)
        if (states[i] == name) return (int)i;
    return -1;
}

int PerformanceAutomaton::find_symbol(const std::string& name) const {
    if (name == "bot") return -1;
    for (size_t i = 0; i < symbols.size(); ++i)
        if (symbols[i] == name) return (int)i;
    return -2;
}

std::optional<std::string> PerformanceAutomaton::finalize() {
    if (states.empty()) {
        states.push_back("q0");
        initial = 0;
    }
    edges.resize(states.size());
    for (size_t q = 0; q < states.size(); ++q) {
        edges[q].resize(symbols.size() + 1);
        auto& bot = edges[q][symbols.size()];
        if (!bot) bot = Edge{(int)q, Rat(0)};
        for (size_t s = 0; s < symbols.size(); ++s)
            if (!edges[q][s])
                return "state " + states[q] + " has no edge on symbol " + symbols[s];
    }
    for (auto& row : edges)
        for (auto& e : row)
            if (e && e->cost < 0) return "negative cost";
    return std::nullopt;
}

std::pair<int, Rat> PerformanceAutomaton::step(int state, int sym) const {
    const auto& e = edges[state][sym < 0 ? symbols.size() : (size_t)sym];
    return {e->target, e->cost};
}

PerformanceAutomaton PerformanceAutomaton::trivial() {
    PerformanceAutomaton w;
    w.finalize();
    return w;
}

int Scheduler::find_state(const std::string& name) const {
    for (size_t i = 0; i < memory.size(); ++i)
        if (memory[i] == name) return (int)i;
    return -1;
}

int Scheduler::step(int state, const std::string& thread) const {
    auto it = next[state].find(thread);
    return it == next[state].end() ? state : it->second;
}

Scheduler Scheduler::make_uniform() {
    Scheduler s;
    s.uniform = true;
    s.memory = {"m0"};
    s.weights.resize(1);
    s.next.resize(1);
    return s;
}

Scheduler Scheduler::make_nondet() {
    Scheduler s = make_uniform();
    s.uniform = false;
    s.mode = Mode::Nondeterministic;
    return s;
}

std::optional<std::string> Scheduler::bind_check(const std::vector<std::string>& threads) const {
    auto known = [&](const std::string& t) {
        return std::find(threads.begin(), threads.end(), t) != threads.end();
    };
    for (size_t q = 0; q < memory.size(); ++q) {
        for (const auto& [t, w] : weights[q]) {
            if (!known(t)) return "scheduler refers to unknown thread " + t;
            if (w <= 0) return "scheduler weight for " + t + " must be positive";
        }
        for (const auto& [t, _] : next[q])
            if (!known(t)) return "scheduler refers to unknown thread " + t;
        if (mode == Mode::Probabilistic && !uniform) {
            Rat sum(0);
            for (const auto& [_, w] : weights[q]) sum += w;
            if (sum != 1)
                return "weights in memory state " + memory[q] + " sum to " + rat_str(sum) +
                       ", not 1";
        }
    }
    return std::nullopt;
}

std::vector<std::pair<int, Rat>> restrict_active(const Scheduler& sch, int state,
                                                 const std::vector<std::string>& thread_names,
                                                 const std::vector<int>& active) {
    std::vector<std::pair<int, Rat>> out;
    if (sch.mode == Scheduler::Mode::Nondeterministic) {
        for (int t : active) out.push_back({t, Rat(1)});
        return out;
    }
    if (sch.uniform) {
        Rat p(1, (long)std::max<size_t>(active.size(), 1));
        for (int t : active) out.push_back({t, p});
        return out;
    }
    Rat total(0);
    for (int t : active) {
        auto it = sch.weights[state].find(thread_names[t]);
        if (it != sch.weights[state].end()) total += it->second;
    }
    if (total == 0) return out;
    for (int t : active) {
        auto it = sch.weights[state].find(thread_names[t]);
        if (it != sch.weights[state].end()) out.push_back({t, it->second / total});
    }
    return out;
}

}  // namespace qsynth
