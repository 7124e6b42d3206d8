#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfsgg/graph.hpp"

namespace testutil {

inline lfsgg::Vocabulary make_vocab(int n_classes, int n_predicates, int max_instances = 8) {
    lfsgg::Vocabulary v;
    for (int c = 0; c < n_classes; ++c) v.classes.push_back("c" + std::to_string(c));
    for (int p = 0; p < n_predicates; ++p) v.predicates.push_back("p" + std::to_string(p));
    v.max_instance_count = max_instances;
    return v;
}

inline lfsgg::Quintuple q(int scls, int sidx, int pred, int ocls, int oidx) {
    return {{scls, sidx}, {ocls, oidx}, pred, std::nullopt};
}

inline lfsgg::SceneGraph graph(std::string id, std::vector<lfsgg::Quintuple> qs) {
    lfsgg::SceneGraph g;
    g.image_id = std::move(id);
    g.quintuples = std::move(qs);
    return g;
}

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto candidate = base / ("lfsgg-test-" + std::to_string(rd()) + "-" +
                                     std::to_string(counter.fetch_add(1)));
            if (std::filesystem::create_directory(candidate)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create temp dir");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace testutil
