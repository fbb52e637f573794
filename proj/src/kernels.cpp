// Backend selection for the kernel table.

#include <atomic>
#include <cstdlib>
#include <string>

#include "seppmix/common.hpp"
#include "seppmix/kernels.hpp"
#include "seppmix/types.hpp"

namespace seppmix::kernels {
namespace {

std::atomic<int> g_backend{-1}; // -1 unresolved, else Backend value

Backend resolve_default() {
    if (const char* env = std::getenv("SEPPMIX_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return Backend::scalar;
        if (v == "avx2") {
            if (!avx2_supported())
                throw ConfigError("SEPPMIX_KERNELS=avx2 but AVX2 is unavailable on this host");
            return Backend::avx2;
        }
        if (!v.empty() && v != "auto")
            throw ConfigError("SEPPMIX_KERNELS must be scalar, avx2 or auto (got '" + v + "')");
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

} // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return avx2_compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() {
    int b = g_backend.load(std::memory_order_acquire);
    if (b < 0) {
        const Backend resolved = resolve_default();
        g_backend.store(static_cast<int>(resolved), std::memory_order_release);
        return resolved;
    }
    return static_cast<Backend>(b);
}

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        throw ConfigError("AVX2 kernel backend requested but unavailable on this host");
    g_backend.store(static_cast<int>(b), std::memory_order_release);
}

const Ops& ops() {
    return active_backend() == Backend::avx2 ? avx2_ops() : scalar_ops();
}

std::string backend_name(Backend b) {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

} // namespace seppmix::kernels

namespace seppmix {

const char* mixer_name(MixerKind k) {
    switch (k) {
        case MixerKind::none: return "none";
        case MixerKind::mixup: return "mixup";
        case MixerKind::cutmix: return "cutmix";
        case MixerKind::patchmix: return "patchmix";
        case MixerKind::seppmix: return "seppmix";
    }
    return "none";
}

MixerKind mixer_from_name(const std::string& name) {
    if (name == "none") return MixerKind::none;
    if (name == "mixup") return MixerKind::mixup;
    if (name == "cutmix") return MixerKind::cutmix;
    if (name == "patchmix") return MixerKind::patchmix;
    if (name == "seppmix") return MixerKind::seppmix;
    throw ConfigError("unknown mixer '" + name + "'");
}

} // namespace seppmix
