#include "ridgelab/errors.hpp"

namespace ridgelab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::ModelViolation: return "model violation";
    case ErrorKind::Numerical: return "numerical error";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Index: return "index error";
    case ErrorKind::MissingChannel: return "missing channel";
    case ErrorKind::Band: return "band error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::InsufficientTrials: return "insufficient trials";
    case ErrorKind::InvalidWavelet: return "invalid wavelet";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Input: return "input error";
    case ErrorKind::ZeroField: return "zero field";
  }
  return "error";
}

}  // namespace ridgelab
