#pragma once

#include <stdexcept>
#include <string>

namespace curbflow {

// Exit codes used by the command-line front end.
enum class ExitCode : int {
    ok = 0,
    input_error = 2,
    solver_infeasible = 3,
    internal = 4,
};

// Malformed or inconsistent user input: bad files, unknown ids, violated
// preconditions on data the caller supplied.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A panel cell that is marked missing was read as if it held a value.
class MissingCell : public InputError {
public:
    using InputError::InputError;
};

// Numerical failure that is a property of the data (singular design,
// undefined slope, rank deficiency).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularDesign : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// The re-routing subproblem admits no feasible point.
class InfeasibleProblem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace curbflow
