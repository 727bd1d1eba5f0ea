#include "pca/error.hpp"

namespace pca {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::NegativeInput: return "NegativeInput";
    case ErrorCode::ExponentMismatch: return "ExponentMismatch";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::PlaintextOutOfRange: return "PlaintextOutOfRange";
    case ErrorCode::MalformedCiphertext: return "MalformedCiphertext";
    case ErrorCode::InvalidMessage: return "InvalidMessage";
    case ErrorCode::InvalidBlindedMessage: return "InvalidBlindedMessage";
    case ErrorCode::VerificationFailedAtCreation: return "VerificationFailedAtCreation";
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SignatureInvalid: return "SignatureInvalid";
    case ErrorCode::NormMismatch: return "NormMismatch";
    case ErrorCode::BundleConflict: return "BundleConflict";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace pca
