/**
 * @file midi.cpp
 * @brief Standard MIDI File reader.
 */

#include "scoregraph/midi.h"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "scoregraph/error.h"

namespace scoregraph {

namespace {

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}

  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::uint8_t peek() const {
    need(1);
    return bytes_[pos_];
  }
  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16be() {
    need(2);
    auto v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u32be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    fail("variable-length quantity longer than 4 bytes");
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void skip(std::size_t n) { take(n); }

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << context_ << " at byte " << pos_ << ": " << what;
    throw ParseError(os.str());
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) fail("unexpected end of data");
  }

  std::span<const std::uint8_t> bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

struct OpenNote {
  Tick onset;
  std::int64_t seq;
};

struct TrackState {
  std::vector<Note>& notes;
  std::vector<TimeSigEvent>& time_sigs;
  std::vector<std::string>& warnings;
  std::int64_t& next_seq;
};

std::uint8_t data_byte(ByteReader& r) {
  const std::uint8_t b = r.u8();
  if (b & 0x80) r.fail("status byte where data byte expected");
  return b;
}

void parse_track(std::span<const std::uint8_t> chunk, int track_index, TrackState& st) {
  ByteReader r(chunk, "track " + std::to_string(track_index));
  std::map<std::pair<int, int>, std::deque<OpenNote>> open;
  Tick tick = 0;
  std::uint8_t running = 0;

  auto close = [&](int channel, int pitch) {
    auto it = open.find({channel, pitch});
    if (it == open.end() || it->second.empty()) {
      std::ostringstream os;
      os << "track " << track_index << ": note-off for pitch " << pitch << " channel " << channel
         << " at tick " << tick << " without open note; ignored";
      st.warnings.push_back(os.str());
      return;
    }
    const OpenNote on = it->second.front();
    it->second.pop_front();
    Note note;
    note.id = on.seq;
    note.onset = on.onset;
    note.duration = tick - on.onset;
    note.pitch = pitch;
    note.channel = channel;
    st.notes.push_back(note);
  };

  while (!r.at_end()) {
    tick += r.vlq();
    std::uint8_t status = r.peek();
    if (status & 0x80) {
      r.u8();
    } else {
      if (running == 0) r.fail("data byte without running status");
      status = running;
    }

    if (status == 0xFF) {
      running = 0;
      const std::uint8_t type = r.u8();
      const std::uint32_t len = r.vlq();
      auto data = r.take(len);
      if (type == 0x2F) break;
      if (type == 0x58) {
        if (len < 2 || data[0] == 0 || data[1] > 10) {
          st.warnings.push_back("track " + std::to_string(track_index) +
                                ": invalid time-signature event skipped");
          continue;
        }
        st.time_sigs.push_back({tick, data[0], 1 << data[1]});
      }
      continue;
    }
    if (status == 0xF0 || status == 0xF7) {
      running = 0;
      r.skip(r.vlq());
      continue;
    }
    if (status >= 0xF0) r.fail("unsupported system message in track data");

    running = status;
    const int channel = status & 0x0F;
    switch (status & 0xF0) {
      case 0x80: {
        const int pitch = data_byte(r);
        data_byte(r);
        close(channel, pitch);
        break;
      }
      case 0x90: {
        const int pitch = data_byte(r);
        const int velocity = data_byte(r);
        if (velocity == 0) {
          close(channel, pitch);
        } else {
          open[{channel, pitch}].push_back({tick, st.next_seq++});
        }
        break;
      }
      case 0xC0:
      case 0xD0:
        data_byte(r);
        break;
      default:  // 0xA0 aftertouch, 0xB0 control change, 0xE0 pitch bend
        data_byte(r);
        data_byte(r);
        break;
    }
  }

  // Dangling note-ons are closed at the track's final tick.
  for (auto& [key, queue] : open) {
    for (const OpenNote& on : queue) {
      std::ostringstream os;
      os << "track " << track_index << ": note-on for pitch " << key.second << " channel "
         << key.first << " at tick " << on.onset << " never closed; closed at tick " << tick;
      st.warnings.push_back(os.str());
      Note note;
      note.id = on.seq;
      note.onset = on.onset;
      note.duration = tick - on.onset;
      note.pitch = key.second;
      note.channel = key.first;
      st.notes.push_back(note);
    }
  }
}

}  // namespace

MidiImport parse_midi(std::span<const std::uint8_t> bytes, std::string source_name) {
  ByteReader r(bytes, source_name.empty() ? std::string("midi") : source_name);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), "MThd")) r.fail("missing MThd header");
  const std::uint32_t header_len = r.u32be();
  if (header_len < 6) r.fail("header length " + std::to_string(header_len) + " < 6");
  const std::uint16_t format = r.u16be();
  const std::uint16_t ntracks = r.u16be();
  const std::uint16_t division = r.u16be();
  r.skip(header_len - 6);
  if (format > 1) r.fail("unsupported SMF format " + std::to_string(format));
  if (division & 0x8000) r.fail("SMPTE time division is not supported");
  if (division == 0) r.fail("zero ticks per quarter note");

  MidiImport result;
  Score& score = result.score;
  score.source_name = std::move(source_name);
  score.divisions_per_quarter = division;
  std::int64_t next_seq = 0;
  TrackState state{score.notes, score.time_sigs, result.warnings, next_seq};

  int track_index = 0;
  while (!r.at_end()) {
    const auto id = r.take(4);
    const std::uint32_t len = r.u32be();
    auto chunk = r.take(len);
    if (std::equal(id.begin(), id.end(), "MTrk")) parse_track(chunk, track_index++, state);
  }
  if (track_index != ntracks) {
    result.warnings.push_back("header declares " + std::to_string(ntracks) + " tracks, found " +
                              std::to_string(track_index));
  }

  std::sort(score.notes.begin(), score.notes.end(),
            [](const Note& a, const Note& b) { return a.id < b.id; });
  normalize_time_sigs(score);
  result.score = sort_score(std::move(score)).score;
  return result;
}

}  // namespace scoregraph
