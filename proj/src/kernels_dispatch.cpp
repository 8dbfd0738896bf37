#include "cnet/kernels.hpp"

#include <cstdlib>

#include "cnet/errors.hpp"

namespace cnet::kernels {
namespace {

const KernelTable* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
    if (avx2_supported()) return &avx2_table();
#endif
    return &scalar_table();
}

const KernelTable* initial_table() {
    if (const char* env = std::getenv("CNET_SIMD")) {
        const std::string name(env);
        if (name == "scalar") return &scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
        if (name == "avx2" && avx2_supported()) return &avx2_table();
#endif
        // Unknown or unsupported value: fall through to auto detection.
    }
    return pick_auto();
}

const KernelTable*& table_slot() {
    static const KernelTable* table = initial_table();
    return table;
}

}  // namespace

const KernelTable& active() { return *table_slot(); }

void force_backend(const std::string& name) {
    if (name == "auto") {
        table_slot() = pick_auto();
        return;
    }
    if (name == "scalar") {
        table_slot() = &scalar_table();
        return;
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!avx2_supported())
            throw Error("kernel backend 'avx2' not supported on this CPU");
        table_slot() = &avx2_table();
        return;
    }
#endif
    throw Error("unknown kernel backend: " + name);
}

}  // namespace cnet::kernels
