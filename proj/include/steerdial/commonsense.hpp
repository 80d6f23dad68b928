#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace steerdial {

// The ten social relations, in canonical order.
enum class Relation : std::uint8_t {
    oEffect,
    oReact,
    oWant,
    xAttr,
    xEffect,
    xIntent,
    xNeed,
    xReact,
    xReason,
    xWant,
};

inline constexpr std::size_t kRelationCount = 10;

const std::array<Relation, kRelationCount>& all_relations();
const std::string& relation_name(Relation r);
// -1 when the name is unknown.
int relation_index(const std::string& name);

struct CommonsenseTuple {
    Relation relation = Relation::oEffect;
    std::string entailment;
    bool operator==(const CommonsenseTuple&) const = default;
};

// Relation -> sentence template with one "{}" slot.
class TemplateTable {
  public:
    static TemplateTable default_table();
    TemplateTable(std::map<Relation, std::string> templates);

    const std::string& template_for(Relation r) const;

  private:
    std::map<Relation, std::string> templates_;
};

std::string verbalize(const CommonsenseTuple& tuple, const TemplateTable& table);

// Entailment source: a deterministic JSONL cache, optionally backed by a
// remote service whose responses are written through to the cache.
class CommonsenseBackend {
  public:
    virtual ~CommonsenseBackend() = default;
    // Exactly one tuple per relation, in canonical order.
    virtual std::vector<CommonsenseTuple> generate(const std::string& text) = 0;
};

class CacheBackend : public CommonsenseBackend {
  public:
    explicit CacheBackend(const std::string& path);
    std::vector<CommonsenseTuple> generate(const std::string& text) override;

    bool contains(const std::string& text) const { return entries_.count(text) != 0; }
    // Appends an entry to both the in-memory map and the cache file.
    void put(const std::string& text, const std::vector<CommonsenseTuple>& tuples);

  private:
    std::string path_;
    std::map<std::string, std::vector<CommonsenseTuple>> entries_;
};

class RemoteBackend : public CommonsenseBackend {
  public:
    // host like "http://127.0.0.1:8089"; cache receives successful responses.
    RemoteBackend(std::string endpoint, int timeout_ms, CacheBackend* write_through);
    std::vector<CommonsenseTuple> generate(const std::string& text) override;

  private:
    std::string endpoint_;
    int timeout_ms_;
    CacheBackend* cache_;  // may be null
};

std::vector<CommonsenseTuple> generate_tuples(const std::string& text, CommonsenseBackend& backend);

// History sentences joined by a space, then the verbalized sentences for the
// selected relations (canonical order), each separated by a space.
std::string augment_history(const std::vector<std::string>& history_sentences,
                            const std::vector<CommonsenseTuple>& tuples, const TemplateTable& table,
                            const std::vector<Relation>& selection);

// Verbalized sentences for the selected relations in canonical order.
std::vector<std::string> verbalize_selected(const std::vector<CommonsenseTuple>& tuples, const TemplateTable& table,
                                            const std::vector<Relation>& selection);

}  // namespace steerdial
