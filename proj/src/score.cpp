/**
 * @file score.cpp
 * @brief Score normalization, validation, and the canonical note-list JSON format.
 */

#include "scoregraph/score.h"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "scoregraph/error.h"

namespace scoregraph {

namespace {

using nlohmann::json;

bool is_power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

std::pair<std::size_t, std::size_t> line_col_at(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::int64_t require_int(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + "." + key + ": missing required field");
  if (!it->is_number_integer()) throw ParseError(path + "." + key + ": expected integer");
  return it->get<std::int64_t>();
}

std::optional<std::int64_t> optional_int(const json& obj, const char* key,
                                         const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw ParseError(path + "." + key + ": expected integer");
  return it->get<std::int64_t>();
}

}  // namespace

SortResult sort_score(Score score) {
  std::stable_sort(score.notes.begin(), score.notes.end(), [](const Note& a, const Note& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    return a.id < b.id;
  });
  SortResult result;
  result.original_ids.reserve(score.notes.size());
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    result.original_ids.push_back(score.notes[i].id);
    score.notes[i].id = static_cast<std::int64_t>(i);
  }
  result.score = std::move(score);
  return result;
}

std::vector<Violation> validate_score(const Score& score) {
  std::vector<Violation> out;
  if (score.divisions_per_quarter <= 0) {
    out.push_back({"divisions_per_quarter", std::nullopt, "must be positive"});
  }

  const auto n = static_cast<std::int64_t>(score.notes.size());
  std::map<std::int64_t, std::vector<std::size_t>> by_id;
  for (std::size_t i = 0; i < score.notes.size(); ++i) {
    const Note& note = score.notes[i];
    by_id[note.id].push_back(i);
    if (note.onset < 0) out.push_back({"onset", note.id, "negative onset"});
    if (note.duration < 0) out.push_back({"duration", note.id, "negative duration"});
    if (note.pitch < 0 || note.pitch > 127) {
      out.push_back({"pitch", note.id, "pitch outside 0-127"});
    }
    if (note.voice && *note.voice < 0) out.push_back({"voice", note.id, "negative voice"});
    if (note.channel && *note.channel < 0) {
      out.push_back({"channel", note.id, "negative channel"});
    }
  }
  for (const auto& [id, positions] : by_id) {
    // One violation per pair of notes sharing an id.
    for (std::size_t a = 0; a < positions.size(); ++a) {
      for (std::size_t b = a + 1; b < positions.size(); ++b) {
        std::ostringstream msg;
        msg << "duplicate id at positions " << positions[a] << " and " << positions[b];
        out.push_back({"id", id, msg.str()});
      }
    }
    if (id < 0 || id >= n) out.push_back({"id", id, "id outside dense range 0..n-1"});
  }

  if (score.time_sigs.empty() || score.time_sigs.front().at != 0) {
    out.push_back({"time_sigs", std::nullopt, "first time signature must be at division 0"});
  }
  for (std::size_t i = 0; i < score.time_sigs.size(); ++i) {
    const auto& ts = score.time_sigs[i];
    if (i > 0 && ts.at <= score.time_sigs[i - 1].at) {
      out.push_back({"time_sigs", std::nullopt, "time signatures not strictly increasing"});
    }
    if (ts.numerator <= 0) out.push_back({"time_sigs", std::nullopt, "numerator must be positive"});
    if (!is_power_of_two(ts.denominator)) {
      out.push_back({"time_sigs", std::nullopt, "denominator must be a power of two"});
    }
  }
  return out;
}

void normalize_time_sigs(Score& score) {
  auto& sigs = score.time_sigs;
  std::stable_sort(sigs.begin(), sigs.end(),
                   [](const TimeSigEvent& a, const TimeSigEvent& b) { return a.at < b.at; });
  std::vector<TimeSigEvent> unique;
  for (const auto& ts : sigs) {
    if (!unique.empty() && unique.back().at == ts.at) {
      unique.back() = ts;
    } else {
      unique.push_back(ts);
    }
  }
  if (unique.empty() || unique.front().at != 0) {
    unique.insert(unique.begin(), TimeSigEvent{0, 4, 4});
  }
  sigs = std::move(unique);
}

std::string format_violations(std::span<const Violation> violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i) os << "; ";
    os << v.field;
    if (v.note_id) os << " (note " << *v.note_id << ")";
    os << ": " << v.message;
  }
  return os.str();
}

Score parse_note_json(std::string_view text, std::string source_name) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col_at(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream msg;
    msg << source_name << ":" << line << ":" << col << ": malformed JSON (" << e.what() << ")";
    throw ParseError(msg.str());
  }
  if (!doc.is_object()) throw ParseError("document: expected a JSON object");

  Score score;
  score.source_name = std::move(source_name);
  const auto dpq = require_int(doc, "divisions_per_quarter", "document");
  if (dpq <= 0 || dpq > std::numeric_limits<int>::max()) {
    throw ParseError("document.divisions_per_quarter: must be a positive integer");
  }
  score.divisions_per_quarter = static_cast<int>(dpq);

  if (auto it = doc.find("time_signatures"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("document.time_signatures: expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& ev = (*it)[i];
      const std::string path = "time_signatures[" + std::to_string(i) + "]";
      if (!ev.is_object()) throw ParseError(path + ": expected object");
      const auto at = require_int(ev, "at", path);
      const auto num = require_int(ev, "num", path);
      const auto den = require_int(ev, "den", path);
      if (at < 0) throw ValidationError(path + ".at: negative position", {});
      if (num <= 0 || num > 1024) throw ValidationError(path + ".num: must be positive", {});
      if (den <= 0 || den > 1024 || !is_power_of_two(static_cast<int>(den))) {
        throw ValidationError(path + ".den: must be a power of two", {});
      }
      score.time_sigs.push_back({at, static_cast<int>(num), static_cast<int>(den)});
    }
  }

  auto notes_it = doc.find("notes");
  if (notes_it == doc.end()) throw ParseError("document.notes: missing required field");
  if (!notes_it->is_array()) throw ParseError("document.notes: expected array");

  std::vector<std::int64_t> bad_ids;
  std::vector<Violation> violations;
  for (std::size_t i = 0; i < notes_it->size(); ++i) {
    const auto& obj = (*notes_it)[i];
    const std::string path = "notes[" + std::to_string(i) + "]";
    if (!obj.is_object()) throw ParseError(path + ": expected object");
    Note note;
    note.id = static_cast<std::int64_t>(i);
    note.onset = require_int(obj, "onset", path);
    note.duration = require_int(obj, "duration", path);
    const auto pitch = require_int(obj, "pitch", path);
    if (auto voice = optional_int(obj, "voice", path)) {
      if (*voice < 0 || *voice > std::numeric_limits<int>::max()) {
        violations.push_back({"voice", note.id, "negative voice"});
      } else {
        note.voice = static_cast<int>(*voice);
      }
    }
    if (note.onset < 0) violations.push_back({"onset", note.id, "negative onset"});
    if (note.duration < 0) violations.push_back({"duration", note.id, "negative duration"});
    if (pitch < 0 || pitch > 127) {
      violations.push_back({"pitch", note.id, "pitch outside 0-127"});
    } else {
      note.pitch = static_cast<int>(pitch);
    }
    score.notes.push_back(note);
  }
  if (!violations.empty()) {
    for (const auto& v : violations) {
      if (v.note_id && (bad_ids.empty() || bad_ids.back() != *v.note_id)) {
        bad_ids.push_back(*v.note_id);
      }
    }
    throw ValidationError("invalid notes: " + format_violations(violations), std::move(bad_ids));
  }

  normalize_time_sigs(score);
  return sort_score(std::move(score)).score;
}

std::string serialize_note_json(const Score& score) {
  json doc;
  doc["divisions_per_quarter"] = score.divisions_per_quarter;
  json sigs = json::array();
  for (const auto& ts : score.time_sigs) {
    sigs.push_back({{"at", ts.at}, {"num", ts.numerator}, {"den", ts.denominator}});
  }
  doc["time_signatures"] = std::move(sigs);
  json notes = json::array();
  for (const auto& note : score.notes) {
    json obj = {{"onset", note.onset}, {"duration", note.duration}, {"pitch", note.pitch}};
    if (note.voice) obj["voice"] = *note.voice;
    notes.push_back(std::move(obj));
  }
  doc["notes"] = std::move(notes);
  return doc.dump(1);
}

}  // namespace scoregraph
