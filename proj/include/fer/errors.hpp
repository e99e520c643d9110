#pragma once

#include <stdexcept>
#include <string>

namespace fer {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor / network shape mismatches.
struct ShapeError : Error { using Error::Error; };
// Backward called without a matching forward trace.
struct StateError : Error { using Error::Error; };
// Malformed CSV row.
struct ParseError : Error { using Error::Error; };
// Pixel count of a CSV row is not 48*48.
struct CountError : Error { using Error::Error; };
// Image file magic / maxval mismatch.
struct FormatError : Error { using Error::Error; };
// Image payload shorter than the header promises.
struct TruncatedError : Error { using Error::Error; };
// Crop box or scan window outside the image.
struct BoundsError : Error { using Error::Error; };
// Class index outside 0..6.
struct RangeError : Error { using Error::Error; };
// Cascade / model document missing or odd elements.
struct SchemaError : Error { using Error::Error; };
// Dangling feature reference in a cascade.
struct IndexError : Error { using Error::Error; };
// Unsupported model file version.
struct VersionError : Error { using Error::Error; };
// Non-finite weights at save time.
struct FiniteError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
// Empty or unusable dataset.
struct DataError : Error { using Error::Error; };
// Bad command / function argument.
struct ArgError : Error { using Error::Error; };

}  // namespace fer
