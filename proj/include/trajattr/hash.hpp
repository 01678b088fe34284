#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trajattr {

/// Streaming FNV-1a (64-bit) for content hashing of stage artifacts.
class Hasher {
public:
    void update(std::string_view bytes) {
        for (char c : bytes) {
            h_ ^= static_cast<unsigned char>(c);
            h_ *= 0x100000001b3ULL;
        }
    }

    std::uint64_t value() const { return h_; }

    std::string hex() const {
        static const char* digits = "0123456789abcdef";
        std::string out(16, '0');
        std::uint64_t v = h_;
        for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
        return out;
    }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string content_hash(std::string_view bytes) {
    Hasher h;
    h.update(bytes);
    return h.hex();
}

/// Hash of a file's bytes; throws std::runtime_error if unreadable.
std::string file_hash(const std::string& path);

}  // namespace trajattr
