#pragma once

#include <stdexcept>
#include <string>

namespace gaugerl {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error("dimension mismatch: " + msg) {}
};

struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& msg) : Error("numerical failure: " + msg) {}
};

struct NotACSet : Error {
    explicit NotACSet(const std::string& msg) : Error("not a C-set: " + msg) {}
};

struct ZeroInput : Error {
    explicit ZeroInput(const std::string& msg) : Error("zero input: " + msg) {}
};

struct StateOutsideS : Error {
    explicit StateOutsideS(const std::string& msg) : Error("state outside safe set: " + msg) {}
};

struct StateOnBoundary : Error {
    explicit StateOnBoundary(const std::string& msg) : Error("state on safe-set boundary: " + msg) {}
};

struct CertificateInvalid : Error {
    explicit CertificateInvalid(const std::string& msg) : Error("certificate invalid: " + msg) {}
};

struct NotConverged : Error {
    explicit NotConverged(const std::string& msg) : Error("did not converge: " + msg) {}
};

struct EmptyInterior : Error {
    explicit EmptyInterior(const std::string& msg) : Error("empty interior: " + msg) {}
};

struct NoValidGain : Error {
    explicit NoValidGain(const std::string& msg) : Error("no valid gain: " + msg) {}
};

struct DisconnectedNetwork : Error {
    explicit DisconnectedNetwork(const std::string& msg) : Error("disconnected network: " + msg) {}
};

struct SingularInertia : Error {
    explicit SingularInertia(const std::string& msg) : Error("singular inertia: " + msg) {}
};

struct NonBoxInputSet : Error {
    explicit NonBoxInputSet(const std::string& msg) : Error("input set is not an axis-aligned box: " + msg) {}
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& msg) : Error("invalid input: " + msg) {}
};

struct TrainingAborted : Error {
    explicit TrainingAborted(const std::string& msg) : Error("training aborted: " + msg) {}
};

}  // namespace gaugerl
