#pragma once

// Minimal always-on test harness: every CHECK is evaluated in Release, a
// failing check prints file:line plus a message and the binary exits nonzero.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace testsupport {

inline int g_checks = 0;
inline int g_failures = 0;

inline void record(bool ok, const char* file, int line, const std::string& msg) {
    ++g_checks;
    if (!ok) {
        ++g_failures;
        std::fprintf(stderr, "[FAIL] %s:%d  %s\n", file, line, msg.c_str());
    }
}

inline int summary(const char* suite) {
    if (g_failures == 0) {
        std::printf("[PASS] %s: %d checks\n", suite, g_checks);
        return 0;
    }
    std::printf("[FAIL] %s: %d of %d checks failed\n", suite, g_failures, g_checks);
    return 1;
}

} // namespace testsupport

#define CHECK(cond) \
    testsupport::record((cond), __FILE__, __LINE__, #cond)

#define CHECK_MSG(cond, msg) \
    testsupport::record((cond), __FILE__, __LINE__, std::string(#cond) + "  " + (msg))

#define CHECK_NEAR(a, b, tol)                                                              \
    do {                                                                                   \
        const double va_ = (a), vb_ = (b), vt_ = (tol);                                    \
        testsupport::record(std::isfinite(va_) && std::abs(va_ - vb_) <= vt_, __FILE__,    \
                            __LINE__,                                                      \
                            std::string(#a " ~ " #b) + "  got " + std::to_string(va_) +    \
                                " vs " + std::to_string(vb_) + " (tol " +                  \
                                std::to_string(vt_) + ")");                                \
    } while (0)

#define TEST_MAIN(suite)                       \
    int main() {                               \
        run_all();                             \
        return testsupport::summary(suite);    \
    }
