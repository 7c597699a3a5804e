#pragma once

#include <stdexcept>
#include <string>

namespace lavawatch {

// Root of every error the library throws. Subclasses map one-to-one onto the
// failure kinds callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedImage : public Error { using Error::Error; };
class UnsupportedFormat : public Error { using Error::Error; };
class DimensionMismatch : public Error { using Error::Error; };
class InvalidArgument : public Error { using Error::Error; };
class EmptyBlob : public Error { using Error::Error; };
class ZeroDisplacement : public Error { using Error::Error; };
class IndeterminateTrajectory : public Error { using Error::Error; };
class NoFlows : public Error { using Error::Error; };
class IoFailure : public Error { using Error::Error; };
class BindFailure : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class FlowOutOfBounds : public Error { using Error::Error; };

}  // namespace lavawatch
