#pragma once

#include <string>
#include <vector>

#include "qsynth/game.hpp"
#include "qsynth/solvers.hpp"

namespace qsynth {

struct Partition {
    std::vector<int> cls;  // class index per state
    int num_classes = 0;

    static Partition identity(size_t n);
};

/// Quantitative probabilistic bisimulation check: classes never mix safe and
/// unsafe states; class members have equal action label sets; per action and
/// target class, the (weight, probability-mass) decomposition is equal across
/// class members. Parallel edges with distinct weights are kept distinct.
bool check_qpb(const MDP& m, const Partition& p);

/// Lumped MDP over the partition's classes. Throws when check_qpb fails.
MDP quotient(const MDP& m, const Partition& p);

/// Coarsest partition accepted by check_qpb, by signature refinement.
Partition coarsest_qpb(const MDP& m);

struct AbstractionResult {
    bool accepted = false;
    std::string reason;  // rejection reason when not accepted
    Partition partition;
    std::vector<SysKey> masked_keys;  // per state; identical within a class
};

/// Erases the listed variables' values from the state keys. Rejects when a
/// listed variable occurs in any guard or flows into a non-listed variable.
/// The partition is additionally verified with check_qpb before acceptance.
AbstractionResult data_abstraction(const PartialProgram& p, const FixedSystem& fs,
                                   const std::vector<std::string>& vars);

/// Keeps only the order-type of the listed variables' values. Rejects when a
/// listed variable occurs in arithmetic, in a comparison whose other side is
/// not a listed variable, or is assigned anything but a constant or a copy of
/// a listed variable. Verified with check_qpb before acceptance.
AbstractionResult order_abstraction(const PartialProgram& p, const FixedSystem& fs,
                                    const std::vector<std::string>& vars);

/// Applies the program's abstraction directives in order, quotienting after
/// each accepted one; rejected directives are skipped with a note.
FixedSystem apply_abstractions(const PartialProgram& p, FixedSystem fs,
                               std::vector<std::string>* notes = nullptr);

}  // namespace qsynth
