#pragma once

#include <stdexcept>
#include <string>

namespace fkbench {

// Every failure raised by the library derives from Error so callers can
// catch the family; the concrete type names the violated contract.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

#define FKBENCH_DEFINE_ERROR(Name)                                           \
    class Name : public Error                                                \
    {                                                                        \
      public:                                                                \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

FKBENCH_DEFINE_ERROR(NonStochasticKernel);
FKBENCH_DEFINE_ERROR(NonPositivePotential);
FKBENCH_DEFINE_ERROR(BadInitialLaw);
FKBENCH_DEFINE_ERROR(ShapeMismatch);
FKBENCH_DEFINE_ERROR(ZeroMass);
FKBENCH_DEFINE_ERROR(EpsilonOutOfRange);
FKBENCH_DEFINE_ERROR(HypothesisNotSatisfied);
FKBENCH_DEFINE_ERROR(DegenerateFunction);
FKBENCH_DEFINE_ERROR(InsufficientReplicates);
FKBENCH_DEFINE_ERROR(DegenerateSigma);
FKBENCH_DEFINE_ERROR(QuadratureFailure);
FKBENCH_DEFINE_ERROR(OscillationTooLarge);
FKBENCH_DEFINE_ERROR(UnknownEntry);
FKBENCH_DEFINE_ERROR(HorizonTooLargeForPathSpace);
FKBENCH_DEFINE_ERROR(InvalidArgument);

#undef FKBENCH_DEFINE_ERROR

} // namespace fkbench
