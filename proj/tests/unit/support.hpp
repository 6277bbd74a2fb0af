#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "projlab/experiment.hpp"

namespace projlab::testing {

inline const FuchsianGroup& torus() {
    static const FuchsianGroup g = punctured_torus_group();
    return g;
}

/// The default form (R_trunc = 14), shared through an on-disk cache in the build tree.
inline const CuspForm4& form() {
    static const CuspForm4 f = [] {
        ExperimentConfig cfg;
        cfg.cache_dir = PROJLAB_TEST_CACHE;
        return obtain_form(torus(), cfg);
    }();
    return f;
}

inline const ProjectiveStructure& structure(cplx c) {
    // A few structures are reused across test cases.
    static std::vector<std::unique_ptr<ProjectiveStructure>> pool;
    for (const auto& s : pool)
        if (s->c() == c) return *s;
    pool.push_back(std::make_unique<ProjectiveStructure>(torus(), form(), c));
    return *pool.back();
}

inline std::string error_code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace projlab::testing
