#include "honeypot/opcua/status.hpp"

#include <cstdio>

namespace honeypot::opcua::status {

std::string name(std::uint32_t code) {
    switch (code) {
        case Good: return "Good";
        case BadUnexpectedError: return "BadUnexpectedError";
        case BadInternalError: return "BadInternalError";
        case BadDecodingError: return "BadDecodingError";
        case BadServiceUnsupported: return "BadServiceUnsupported";
        case BadNothingToDo: return "BadNothingToDo";
        case BadTooManyOperations: return "BadTooManyOperations";
        case BadIdentityTokenInvalid: return "BadIdentityTokenInvalid";
        case BadSecureChannelIdInvalid: return "BadSecureChannelIdInvalid";
        case BadSessionIdInvalid: return "BadSessionIdInvalid";
        case BadSessionNotActivated: return "BadSessionNotActivated";
        case BadNodeIdUnknown: return "BadNodeIdUnknown";
        case BadAttributeIdInvalid: return "BadAttributeIdInvalid";
        case BadIndexRangeInvalid: return "BadIndexRangeInvalid";
        case BadBrowseDirectionInvalid: return "BadBrowseDirectionInvalid";
        case BadNotWritable: return "BadNotWritable";
        case BadSecurityPolicyRejected: return "BadSecurityPolicyRejected";
        case BadTypeMismatch: return "BadTypeMismatch";
        case BadTcpMessageTypeInvalid: return "BadTcpMessageTypeInvalid";
        case BadTcpSecureChannelUnknown: return "BadTcpSecureChannelUnknown";
        case BadTcpMessageTooLarge: return "BadTcpMessageTooLarge";
        case BadTcpInternalError: return "BadTcpInternalError";
        case BadSecurityChecksFailed: return "BadSecurityChecksFailed";
        case BadProtocolVersionUnsupported: return "BadProtocolVersionUnsupported";
        case BadSecurityModeRejected: return "BadSecurityModeRejected";
        case BadTimestampsToReturnInvalid: return "BadTimestampsToReturnInvalid";
        case BadMaxAgeInvalid: return "BadMaxAgeInvalid";
        case BadResponseTooLarge: return "BadResponseTooLarge";
        case BadTooManySessions: return "BadTooManySessions";
        case BadTcpEndpointUrlInvalid: return "BadTcpEndpointUrlInvalid";
        default: {
            char buf[16];
            std::snprintf(buf, sizeof buf, "0x%08X", code);
            return buf;
        }
    }
}

}  // namespace honeypot::opcua::status
