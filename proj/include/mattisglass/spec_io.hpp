#pragma once

#include <string>

#include "mattisglass/model.hpp"

#include "json.hpp"

namespace mattis {

// Model document layout (matrices row-major):
// {"D","d","L","xi":{"kind","betas"},"prior":{"support","weights"},
//  "chi":{"support","probs"},"h":["expr",...],"G":"expr","t",
//  "q":{"zetas","values"}}
nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);  // validates before returning

ModelSpec load_spec_file(const std::string& path);
void save_spec_file(const ModelSpec& spec, const std::string& path);

// FNV-1a over the canonical (sorted-key) serialization
std::string spec_hash(const ModelSpec& spec);

}  // namespace mattis
