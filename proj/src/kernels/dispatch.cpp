#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "splatfix/kernels.hpp"

namespace splatfix::kernels {

const KernelTable* avx2_table();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* resolve(std::string_view name) {
    if (name == "scalar") {
        return &scalar();
    }
    if (name == "avx2") {
        return avx2();
    }
    if (name == "auto" || name.empty()) {
        const KernelTable* v = avx2();
        return v ? v : &scalar();
    }
    return nullptr;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table = [] {
        const char* env = std::getenv("SPLATFIX_KERNELS");
        const KernelTable* t = resolve(env ? std::string_view(env) : std::string_view("auto"));
        return t ? t : resolve("auto");
    }();
    return table;
}

}  // namespace

const KernelTable* avx2() {
    static const bool supported = cpu_has_avx2();
    return supported ? avx2_table() : nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(std::string_view name) {
    const KernelTable* t = resolve(name);
    if (!t) {
        throw std::invalid_argument("kernel variant '" + std::string(name) + "' is unavailable");
    }
    current().store(t, std::memory_order_release);
}

}  // namespace splatfix::kernels
