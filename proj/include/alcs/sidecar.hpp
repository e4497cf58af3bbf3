#pragma once

// Client side of the embedding sidecar protocol. The harness writes a JSON
// request plus a JSONL file of texts, runs `<command> <request.json>`, and
// expects the DVEC promised in "out" and a reply manifest at
// `<request.json>.done` echoing the request with output shapes.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "dvec.hpp"
#include "error.hpp"

namespace alcs {

struct SidecarText {
    DocId id = 0;
    std::string text;
    std::string role = "pool";  // "pool" texts may be used for adaptation; "test" texts are only embedded
};

struct LabeledExample {
    DocId id = 0;
    std::string label;
};

struct SidecarRequest {
    std::string variant;
    std::string model;
    std::filesystem::path pool_texts;
    std::vector<LabeledExample> labeled;
    std::filesystem::path out;
    int epochs_mlm = 10;
    int epochs_atc = 5;
    double lr = 5e-5;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json labels = nlohmann::json::array();
        for (const auto& l : labeled) labels.push_back({{"id", l.id}, {"label", l.label}});
        return {{"variant", variant},       {"model", model},       {"pool_texts", pool_texts.string()},
                {"labeled", labels},        {"out", out.string()},  {"epochs_mlm", epochs_mlm},
                {"epochs_atc", epochs_atc}, {"lr", lr},             {"seed", seed}};
    }
};

struct SidecarResult {
    FeatureMatrix embeddings;
    nlohmann::json reply;
};

namespace detail {

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

// Writes the texts and request under `workdir` (as <stem>.texts.jsonl and
// <stem>.request.json), runs the sidecar, and validates its outputs.
inline SidecarResult invoke_sidecar(const std::string& command, SidecarRequest request,
                                    const std::vector<SidecarText>& texts, const std::filesystem::path& workdir,
                                    const std::string& stem) {
    std::filesystem::create_directories(workdir);
    const auto texts_path = workdir / (stem + ".texts.jsonl");
    const auto request_path = workdir / (stem + ".request.json");
    const auto log_path = workdir / (stem + ".log");
    const auto reply_path = std::filesystem::path(request_path.string() + ".done");
    if (request.out.empty()) request.out = workdir / (stem + ".dvec");
    request.pool_texts = texts_path;
    std::filesystem::remove(request.out);
    std::filesystem::remove(reply_path);

    {
        std::ofstream out(texts_path, std::ios::trunc);
        for (const auto& t : texts) out << nlohmann::json{{"id", t.id}, {"text", t.text}, {"role", t.role}}.dump() << '\n';
        if (!out) throw Error("cannot write " + texts_path.string());
    }
    {
        std::ofstream out(request_path, std::ios::trunc);
        out << request.to_json().dump(2) << '\n';
        if (!out) throw Error("cannot write " + request_path.string());
    }

    const std::string cmd =
        command + " " + detail::shell_quote(request_path.string()) + " > " + detail::shell_quote(log_path.string()) + " 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = status == -1 ? -1 : (WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status));
    if (code != 0)
        throw SidecarError("sidecar exited with status " + std::to_string(code) + " for variant '" + request.variant + "'",
                           detail::read_text(log_path));

    if (!std::filesystem::exists(request.out))
        throw SidecarError("sidecar did not write " + request.out.string(), detail::read_text(log_path));
    FeatureMatrix m;
    try {
        m = load_embeddings(request.out);
    } catch (const Error& e) {
        throw SidecarError(std::string("sidecar output invalid: ") + e.what(), detail::read_text(log_path));
    }
    if (m.n_rows() != texts.size())
        throw SidecarError("sidecar wrote " + std::to_string(m.n_rows()) + " rows, expected " +
                               std::to_string(texts.size()),
                           detail::read_text(log_path));

    nlohmann::json reply;
    try {
        std::ifstream in(reply_path);
        if (!in) throw Error("missing reply manifest " + reply_path.string());
        reply = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw SidecarError(std::string("sidecar reply unreadable: ") + e.what(), detail::read_text(log_path));
    }
    // The reply must echo exactly the labels it was given.
    if (reply.value("variant", std::string()) != request.variant ||
        reply.value("labeled", nlohmann::json::array()) != request.to_json()["labeled"])
        throw SidecarError("sidecar reply does not echo the request", detail::read_text(log_path));

    std::vector<DocId> ids;
    for (const auto& t : texts) ids.push_back(t.id);
    m.set_row_ids(std::move(ids));
    return {std::move(m), std::move(reply)};
}

} // namespace alcs
