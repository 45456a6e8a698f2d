#pragma once

#include <stdexcept>
#include <string>

namespace biphoton {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A polynomial references a mode the substitution map does not cover.
struct UnmappedMode : Error {
  using Error::Error;
};

// Normalization of a state with zero norm was requested.
struct ZeroState : Error {
  using Error::Error;
};

// The zero polynomial was applied to the vacuum.
struct ZeroOperator : Error {
  using Error::Error;
};

// An optical element was requested on a port id that cannot exist.
struct UnknownPort : Error {
  using Error::Error;
};

// An operation that requires a normalized state received one that is not.
struct NotNormalized : Error {
  using Error::Error;
};

// A numeric argument lies outside its documented range.
struct OutOfRange : Error {
  using Error::Error;
};

// Composition of maps whose output and input mode sets do not line up.
struct UniverseMismatch : Error {
  using Error::Error;
};

// An optical element was declared with coinciding port ids.
struct DuplicatePorts : Error {
  using Error::Error;
};

// A spectral envelope with no bins or all-zero amplitudes.
struct EmptyEnvelope : Error {
  using Error::Error;
};

// A temporal overlap was requested for a non-positive coherence time.
struct NonpositiveCoherence : Error {
  using Error::Error;
};

// A two-port polarization measurement was applied to a state that is not
// one photon per output port.
struct NotTwoPhoton : Error {
  using Error::Error;
};

// A fringe curve from which no visibility can be extracted (empty, negative
// samples, or identically zero).
struct DegenerateCurve : Error {
  using Error::Error;
};

// Pair rate exceeding one of the singles rates.
struct RateInconsistent : Error {
  using Error::Error;
};

// A tag stream whose timestamps are not non-decreasing.
struct UnsortedStream : Error {
  using Error::Error;
};

// Too few samples for the requested statistic.
struct TooFewSamples : Error {
  using Error::Error;
};

// Pump power (or another strictly positive rate input) was not positive.
struct NonpositivePower : Error {
  using Error::Error;
};

// A calibration target that no parameter value can reach.
struct Unreachable : Error {
  using Error::Error;
};

// Filesystem or stream failure while reading or writing artifacts.
struct IoFailure : Error {
  using Error::Error;
};

// Guard against runaway operator expansions: more photons than the hard cap.
struct PhotonCapExceeded : Error {
  using Error::Error;
};

// A run configuration file or flag set that cannot be parsed or validated.
struct ConfigInvalid : Error {
  using Error::Error;
};

}  // namespace biphoton
