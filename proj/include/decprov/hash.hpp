#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace decprov {

using Digest = std::array<std::uint8_t, 32>;

// Chain seed for an empty store.
inline constexpr Digest kGenesisDigest{};

Digest sha256(std::string_view bytes);

// Digest of prev ∥ bytes, the chain-extension step.
Digest chain_hash(const Digest& prev, std::string_view bytes);

std::string to_hex(const Digest& digest);

// Strict: exactly 64 lowercase hex characters.
std::optional<Digest> digest_from_hex(std::string_view hex);

}  // namespace decprov
