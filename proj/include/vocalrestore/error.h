#pragma once

#include <stdexcept>
#include <string>

namespace vr {

// Root of every error raised by the library. Each subclass names one failure
// category so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VR_DEFINE_ERROR(Name)            \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

// generic precondition violations
VR_DEFINE_ERROR(InvalidInputError)

// audio_io
VR_DEFINE_ERROR(ChannelError)
VR_DEFINE_ERROR(FormatError)
VR_DEFINE_ERROR(CorruptFileError)
VR_DEFINE_ERROR(IoError)

// spectral
VR_DEFINE_ERROR(EmptyInputError)
VR_DEFINE_ERROR(NonInvertibleError)

// bandsplit / nncore / generator
VR_DEFINE_ERROR(LayoutError)
VR_DEFINE_ERROR(ShapeError)
VR_DEFINE_ERROR(ConfigError)
VR_DEFINE_ERROR(ManifestError)
VR_DEFINE_ERROR(SampleRateError)

// discriminator / losses
VR_DEFINE_ERROR(InputTooShortError)
VR_DEFINE_ERROR(LengthMismatchError)
VR_DEFINE_ERROR(BranchCountError)
VR_DEFINE_ERROR(StructureError)

// degrade
VR_DEFINE_ERROR(SilentInputError)

// ranking
VR_DEFINE_ERROR(ConnectivityError)
VR_DEFINE_ERROR(DegenerateError)
VR_DEFINE_ERROR(InsufficientDataError)

#undef VR_DEFINE_ERROR

}  // namespace vr
