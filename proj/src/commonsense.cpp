#include "steerdial/commonsense.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "steerdial/errors.hpp"

namespace steerdial {

using json = nlohmann::ordered_json;

const std::array<Relation, kRelationCount>& all_relations() {
    static const std::array<Relation, kRelationCount> order = {
        Relation::oEffect, Relation::oReact,  Relation::oWant, Relation::xAttr,   Relation::xEffect,
        Relation::xIntent, Relation::xNeed,   Relation::xReact, Relation::xReason, Relation::xWant,
    };
    return order;
}

const std::string& relation_name(Relation r) {
    static const std::array<std::string, kRelationCount> names = {
        "oEffect", "oReact", "oWant", "xAttr", "xEffect", "xIntent", "xNeed", "xReact", "xReason", "xWant",
    };
    return names.at(static_cast<std::size_t>(r));
}

int relation_index(const std::string& name) {
    for (std::size_t i = 0; i < kRelationCount; ++i) {
        if (relation_name(static_cast<Relation>(i)) == name) return static_cast<int>(i);
    }
    return -1;
}

TemplateTable::TemplateTable(std::map<Relation, std::string> templates) : templates_(std::move(templates)) {
    for (Relation r : all_relations()) {
        auto it = templates_.find(r);
        if (it == templates_.end()) throw FormatError("template table missing relation " + relation_name(r));
        const std::string& t = it->second;
        auto first = t.find("{}");
        if (first == std::string::npos || t.find("{}", first + 1) != std::string::npos)
            throw FormatError("template for " + relation_name(r) + " must contain exactly one {} slot");
    }
}

TemplateTable TemplateTable::default_table() {
    return TemplateTable({
        {Relation::oEffect, "As a result, others {}."},
        {Relation::oReact, "As a result, others feel {}."},
        {Relation::oWant, "As a result, others want {}."},
        {Relation::xAttr, "PersonX is seen as {}."},
        {Relation::xEffect, "As a result, PersonX {}."},
        {Relation::xIntent, "Because PersonX wanted {}."},
        {Relation::xNeed, "Before, PersonX needed {}."},
        {Relation::xReact, "As a result, PersonX feels {}."},
        {Relation::xReason, "Because {}."},
        {Relation::xWant, "As a result, PersonX wants {}."},
    });
}

const std::string& TemplateTable::template_for(Relation r) const { return templates_.at(r); }

std::string verbalize(const CommonsenseTuple& tuple, const TemplateTable& table) {
    if (tuple.entailment.empty()) throw FormatError("empty entailment for " + relation_name(tuple.relation));
    const std::string& tmpl = table.template_for(tuple.relation);
    auto slot = tmpl.find("{}");
    std::string out = tmpl;
    out.replace(slot, 2, tuple.entailment);
    return out;
}

namespace {

std::vector<CommonsenseTuple> parse_tuple_array(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw FormatError(where + ": tuples must be an array");
    std::vector<CommonsenseTuple> out;
    std::vector<bool> seen(kRelationCount, false);
    for (const auto& item : arr) {
        if (!item.is_object() || !item.contains("relation") || !item.contains("entailment"))
            throw FormatError(where + ": each tuple needs relation and entailment");
        int idx = relation_index(item["relation"].get<std::string>());
        if (idx < 0) throw FormatError(where + ": unknown relation " + item["relation"].get<std::string>());
        if (seen[idx]) throw FormatError(where + ": duplicate relation " + relation_name(static_cast<Relation>(idx)));
        seen[idx] = true;
        CommonsenseTuple t;
        t.relation = static_cast<Relation>(idx);
        t.entailment = item["entailment"].get<std::string>();
        if (t.entailment.empty()) throw FormatError(where + ": empty entailment for " + relation_name(t.relation));
        out.push_back(std::move(t));
    }
    if (out.size() != kRelationCount) throw FormatError(where + ": expected 10 tuples, got " + std::to_string(out.size()));
    std::sort(out.begin(), out.end(), [](const CommonsenseTuple& a, const CommonsenseTuple& b) {
        return static_cast<int>(a.relation) < static_cast<int>(b.relation);
    });
    return out;
}

json tuples_to_json(const std::vector<CommonsenseTuple>& tuples) {
    json arr = json::array();
    for (const auto& t : tuples) arr.push_back({{"relation", relation_name(t.relation)}, {"entailment", t.entailment}});
    return arr;
}

}  // namespace

CacheBackend::CacheBackend(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) return;  // empty cache until first write
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json entry = json::parse(line, nullptr, false);
        if (entry.is_discarded()) throw ParseError(path, line_no, "invalid JSON");
        if (!entry.contains("text") || !entry.contains("tuples"))
            throw ParseError(path, line_no, "cache entry needs text and tuples");
        std::string text = entry["text"].get<std::string>();
        try {
            entries_[text] = parse_tuple_array(entry["tuples"], "cache entry");
        } catch (const FormatError& e) {
            throw ParseError(path, line_no, e.what());
        }
    }
}

std::vector<CommonsenseTuple> CacheBackend::generate(const std::string& text) {
    auto it = entries_.find(text);
    if (it == entries_.end()) throw MissingEntailmentError(text);
    return it->second;
}

void CacheBackend::put(const std::string& text, const std::vector<CommonsenseTuple>& tuples) {
    if (entries_.count(text)) return;
    entries_[text] = tuples;
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to cache " + path_);
    json entry = {{"text", text}, {"tuples", tuples_to_json(tuples)}};
    out << entry.dump() << "\n";
}

RemoteBackend::RemoteBackend(std::string endpoint, int timeout_ms, CacheBackend* write_through)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms), cache_(write_through) {}

std::vector<CommonsenseTuple> RemoteBackend::generate(const std::string& text) {
    if (cache_ && cache_->contains(text)) return cache_->generate(text);

    httplib::Client client(endpoint_);
    client.set_connection_timeout(timeout_ms_ / 1000, timeout_ms_ % 1000 * 1000);
    client.set_read_timeout(timeout_ms_ / 1000, timeout_ms_ % 1000 * 1000);

    json relations = json::array();
    for (Relation r : all_relations()) relations.push_back(relation_name(r));
    json body = {{"text", text}, {"relations", relations}};

    auto res = client.Post("/entail", body.dump(), "application/json");
    if (!res) throw ServiceError("no response from " + endpoint_ + " (timeout or connection failure)");
    if (res->status != 200) throw ServiceError(endpoint_ + " returned status " + std::to_string(res->status));

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("tuples")) throw ServiceError("malformed reply from " + endpoint_);
    std::vector<CommonsenseTuple> tuples;
    try {
        tuples = parse_tuple_array(reply["tuples"], "reply");
    } catch (const FormatError& e) {
        throw ServiceError(std::string(e.what()) + " from " + endpoint_);
    }
    if (cache_) cache_->put(text, tuples);
    return tuples;
}

std::vector<CommonsenseTuple> generate_tuples(const std::string& text, CommonsenseBackend& backend) {
    if (text.empty()) throw EmptyInputError("commonsense query text is empty");
    return backend.generate(text);
}

std::vector<std::string> verbalize_selected(const std::vector<CommonsenseTuple>& tuples, const TemplateTable& table,
                                            const std::vector<Relation>& selection) {
    std::vector<std::string> out;
    for (Relation r : all_relations()) {
        bool selected = false;
        for (Relation s : selection)
            if (s == r) selected = true;
        if (!selected) continue;
        for (const auto& t : tuples) {
            if (t.relation == r) {
                out.push_back(verbalize(t, table));
                break;
            }
        }
    }
    return out;
}

std::string augment_history(const std::vector<std::string>& history_sentences,
                            const std::vector<CommonsenseTuple>& tuples, const TemplateTable& table,
                            const std::vector<Relation>& selection) {
    std::ostringstream joined;
    for (std::size_t i = 0; i < history_sentences.size(); ++i) {
        if (i) joined << " ";
        joined << history_sentences[i];
    }
    auto sentences = verbalize_selected(tuples, table, selection);
    std::string out = joined.str();
    for (const auto& s : sentences) {
        if (!out.empty()) out += " ";
        out += s;
    }
    return out;
}

}  // namespace steerdial
