#ifndef PSO_ERRORS_HPP
#define PSO_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pso {

/// Bad input: dimension mismatch, violated divisibility, empty ensembles, ...
class InvalidArgument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// The operation needs a capability the object does not have, e.g. batch
/// evaluation of an objective without sum structure.
class UnsupportedOperation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// Non-finite or exploding swarm state. Carries the step at which it was seen.
class DivergenceError : public std::runtime_error
{
public:
    explicit DivergenceError(std::uint64_t step)
        : std::runtime_error("swarm diverged at step " + std::to_string(step)), step_(step)
    {
    }

    std::uint64_t step() const noexcept { return step_; }

private:
    std::uint64_t step_;
};

} // namespace pso

#endif // PSO_ERRORS_HPP
