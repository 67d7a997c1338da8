#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace dglearn {

// Domain error carrying a stable machine-readable kind, so the CLI can emit
// structured error JSON without string matching.
class DomainError : public std::runtime_error {
public:
    DomainError(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define DGLEARN_ERROR(Name, kind_literal)                            \
    class Name : public DomainError {                                 \
    public:                                                           \
        explicit Name(const std::string& what)                        \
            : DomainError(kind_literal, what) {}                      \
    }

DGLEARN_ERROR(NotGraphRepresentable, "not_graph_representable");
DGLEARN_ERROR(DimensionMismatch, "dimension_mismatch");
DGLEARN_ERROR(IndexOutOfRange, "index_out_of_range");
DGLEARN_ERROR(NotAcyclic, "not_acyclic");
DGLEARN_ERROR(NotACycle, "not_a_cycle");
DGLEARN_ERROR(NotExchangeable, "not_exchangeable");
DGLEARN_ERROR(NotReducible, "not_reducible");
DGLEARN_ERROR(IllegalTarget, "illegal_target");
DGLEARN_ERROR(PreconditionViolated, "precondition_violated");
DGLEARN_ERROR(SingularSystem, "singular_system");
DGLEARN_ERROR(StabilityRejectionLimit, "stability_rejection_limit");
DGLEARN_ERROR(InfeasibleConstraints, "infeasible_constraints");
DGLEARN_ERROR(NotPositiveDefinite, "not_positive_definite");
DGLEARN_ERROR(OptimizationFailed, "optimization_failed");
DGLEARN_ERROR(UnstableOptimum, "unstable_optimum");
DGLEARN_ERROR(ParseError, "parse");

#undef DGLEARN_ERROR

}  // namespace dglearn
