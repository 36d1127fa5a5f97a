// Copyright 2026 The crat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crat/prompt.hpp"

#include <algorithm>
#include <mutex>
#include <set>

#include "crat/error.hpp"
#include "prompt_assets.hpp"

namespace crat {

PromptTemplate PromptTemplate::compile(std::string name, std::string_view text) {
    PromptTemplate t;
    t.name_ = std::move(name);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            t.pieces_.push_back({false, std::string(text.substr(pos))});
            break;
        }
        if (open > pos) t.pieces_.push_back({false, std::string(text.substr(pos, open - pos))});
        const auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) {
            throw Error(ErrorKind::invalid_argument,
                        "template " + t.name_ + ": unterminated placeholder at " + std::to_string(open));
        }
        std::string key(text.substr(open + 2, close - open - 2));
        if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyz_0123456789") != std::string::npos) {
            throw Error(ErrorKind::invalid_argument,
                        "template " + t.name_ + ": bad placeholder '" + key + "'");
        }
        if (std::find(t.placeholders_.begin(), t.placeholders_.end(), key) == t.placeholders_.end()) {
            t.placeholders_.push_back(key);
        }
        t.pieces_.push_back({true, std::move(key)});
        pos = close + 2;
    }
    return t;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    for (const auto& [key, _] : values) {
        if (std::find(placeholders_.begin(), placeholders_.end(), key) == placeholders_.end()) {
            throw Error(ErrorKind::invalid_argument, "template " + name_ + " has no placeholder '" + key + "'");
        }
    }
    std::string out;
    for (const auto& piece : pieces_) {
        if (!piece.is_placeholder) {
            out += piece.text;
            continue;
        }
        auto it = values.find(piece.text);
        if (it == values.end()) {
            throw Error(ErrorKind::invalid_argument,
                        "template " + name_ + ": no value for '" + piece.text + "'");
        }
        out += it->second;
    }
    return out;
}

namespace {

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
    static const auto templates = [] {
        std::map<std::string, PromptTemplate, std::less<>> m;
        for (const auto& asset : detail::prompt_assets()) {
            std::string_view body = asset.text;
            if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
            m.emplace(std::string(asset.name), PromptTemplate::compile(std::string(asset.name), body));
        }
        return m;
    }();
    return templates;
}

}  // namespace

const PromptTemplate& builtin_template(std::string_view name) {
    const auto& reg = registry();
    auto it = reg.find(name);
    if (it == reg.end()) {
        throw Error(ErrorKind::invalid_argument, "no built-in template '" + std::string(name) + "'");
    }
    return it->second;
}

std::vector<std::string> builtin_template_names() {
    std::vector<std::string> out;
    for (const auto& [k, _] : registry()) out.push_back(k);
    return out;
}

}  // namespace crat
