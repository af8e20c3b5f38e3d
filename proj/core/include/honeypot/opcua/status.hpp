#pragma once

#include <cstdint>
#include <string>

namespace honeypot::opcua::status {

inline constexpr std::uint32_t Good = 0x00000000;
inline constexpr std::uint32_t BadUnexpectedError = 0x80010000;
inline constexpr std::uint32_t BadInternalError = 0x80020000;
inline constexpr std::uint32_t BadDecodingError = 0x80070000;
inline constexpr std::uint32_t BadServiceUnsupported = 0x800B0000;
inline constexpr std::uint32_t BadNothingToDo = 0x800F0000;
inline constexpr std::uint32_t BadTooManyOperations = 0x80100000;
inline constexpr std::uint32_t BadIdentityTokenInvalid = 0x80200000;
inline constexpr std::uint32_t BadSecureChannelIdInvalid = 0x80220000;
inline constexpr std::uint32_t BadSessionIdInvalid = 0x80250000;
inline constexpr std::uint32_t BadSessionNotActivated = 0x80270000;
inline constexpr std::uint32_t BadNodeIdUnknown = 0x80340000;
inline constexpr std::uint32_t BadAttributeIdInvalid = 0x80350000;
inline constexpr std::uint32_t BadIndexRangeInvalid = 0x80360000;
inline constexpr std::uint32_t BadBrowseDirectionInvalid = 0x804D0000;
inline constexpr std::uint32_t BadNotWritable = 0x803B0000;
inline constexpr std::uint32_t BadSecurityPolicyRejected = 0x80550000;
inline constexpr std::uint32_t BadTypeMismatch = 0x80740000;
inline constexpr std::uint32_t BadTcpMessageTypeInvalid = 0x807E0000;
inline constexpr std::uint32_t BadTcpSecureChannelUnknown = 0x807F0000;
inline constexpr std::uint32_t BadTcpMessageTooLarge = 0x80800000;
inline constexpr std::uint32_t BadTcpInternalError = 0x80820000;
inline constexpr std::uint32_t BadSecurityChecksFailed = 0x80130000;
inline constexpr std::uint32_t BadProtocolVersionUnsupported = 0x80BE0000;
inline constexpr std::uint32_t BadSecurityModeRejected = 0x80540000;
inline constexpr std::uint32_t BadTimestampsToReturnInvalid = 0x802B0000;
inline constexpr std::uint32_t BadMaxAgeInvalid = 0x80700000;
inline constexpr std::uint32_t BadResponseTooLarge = 0x80B90000;
inline constexpr std::uint32_t BadTooManySessions = 0x80560000;
inline constexpr std::uint32_t BadTcpEndpointUrlInvalid = 0x80830000;

std::string name(std::uint32_t code);

}  // namespace honeypot::opcua::status
