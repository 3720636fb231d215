#include "dch/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace dch::kernels {

namespace {

const Ops* resolve() {
    const char* forced = std::getenv("DCH_KERNELS");
    if (forced && std::strcmp(forced, "scalar") == 0) return &scalar::ops;
#if defined(__x86_64__) || defined(_M_X64)
    if (forced && std::strcmp(forced, "avx2") == 0) return &avx2::ops;
    if (!forced && avx2::supported()) return &avx2::ops;
#endif
    return &scalar::ops;
}

} // namespace

const Ops& active() {
    static const Ops* table = resolve();
    return *table;
}

const char* isa_name() { return active().name; }

} // namespace dch::kernels
