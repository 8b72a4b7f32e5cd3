#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "milestone/transcript.hpp"

#ifndef FIXTURE_DIR
#error "FIXTURE_DIR must be defined by the build"
#endif

namespace test_support {

inline std::string fixture_path(const std::string& name) {
    return std::string(FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fixture: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Random but well-formed transcript: sorted, dense ids, non-empty texts.
inline milestone::Transcript random_transcript(std::mt19937& rng, int max_utterances = 60) {
    static const char* words[] = {"gem",  "chest", "curse", "red",   "touch", "mirror",
                                  "four", "white", "phrase", "guess", "rule",  "okay"};
    static const char* speakers[] = {"Alice", "Bob", "Cara", "Dan"};
    std::uniform_int_distribution<int> n_dist(0, max_utterances);
    std::uniform_int_distribution<int> len_dist(1, 14);
    std::uniform_int_distribution<int> word_dist(0, 11);
    std::uniform_int_distribution<int> spk_dist(0, 3);
    std::uniform_real_distribution<double> gap(0.1, 3.0);

    milestone::Transcript t;
    t.team_id = "random";
    double clock = 0.0;
    int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
        milestone::Utterance u;
        u.id = i;
        u.speaker = speakers[spk_dist(rng)];
        u.start = clock;
        int len = len_dist(rng);
        std::string text;
        for (int w = 0; w < len; ++w) {
            if (w) text += " ";
            text += words[word_dist(rng)];
        }
        u.text = text;
        u.end = clock + 0.5 * len;
        clock = u.end + gap(rng);
        t.utterances.push_back(std::move(u));
    }
    return t;
}

}  // namespace test_support
