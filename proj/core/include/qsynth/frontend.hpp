#pragma once

#include <stdexcept>
#include <string>

#include "qsynth/model.hpp"
#include "qsynth/perf.hpp"

namespace qsynth {

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " at " + std::to_string(line) + ":" + std::to_string(col)),
          line(line),
          col(col) {}
    int line, col;
};

/// Parses the program grammar; `choice` blocks desugar into plain outgoing
/// transitions. The result has passed validate().
PartialProgram parse_partial_program(const std::string& text);

/// Parses a performance automaton file and finalizes it (bot defaulting,
/// totality check).
PerformanceAutomaton parse_performance_automaton(const std::string& text);

/// Parses a scheduler file: `uniform;`, `nondet;`, or memory states with
/// exact-rational pick weights and next-state updates.
Scheduler parse_scheduler(const std::string& text);

/// Prints a program in the input grammar; parse(emit_program(p)) is
/// semantically identical to p and emit is a fixed point on its own output.
std::string emit_program(const PartialProgram& p);

}  // namespace qsynth
