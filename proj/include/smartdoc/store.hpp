#ifndef SMARTDOC_STORE_HPP
#define SMARTDOC_STORE_HPP

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "codec.hpp"
#include "engine.hpp"
#include "scheduler.hpp"

namespace smartdoc {

/// A session, its transcript (inside Session), its plan once completed, and the
/// revision that produced it.
struct SessionRecord {
    Session session;
    std::optional<ReminderPlan> plan;
    std::uint64_t revision = 0;

    friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

class StoreError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class RevisionConflict : public StoreError {
public:
    RevisionConflict(std::uint64_t expected, std::uint64_t got)
        : StoreError("stale revision " + std::to_string(got) + ", latest is " + std::to_string(expected)),
          latest_(expected) {}

    std::uint64_t latest() const noexcept { return latest_; }

private:
    std::uint64_t latest_;
};

class StorageFailure : public StoreError {
    using StoreError::StoreError;
};

class SessionNotFound : public StoreError {
public:
    explicit SessionNotFound(const std::string& id) : StoreError("no session '" + id + "'") {}
};

enum class StateFilter { Active, Completed, All };

struct SessionSummary {
    std::string id;
    SessionState state;
    Timestamp started_at;

    friend bool operator==(const SessionSummary&, const SessionSummary&) = default;
};

/// Session ids double as file names: `[A-Za-z0-9_-]{1,128}`.
inline bool is_valid_session_id(std::string_view id) {
    return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

namespace codec {

inline Json encode(const SessionRecord& r) {
    return {{"revision", r.revision}, {"session", encode(r.session)}, {"plan", r.plan ? encode(*r.plan) : Json(nullptr)}};
}

inline SessionRecord decode_record(const Json& j) {
    SessionRecord r;
    r.revision = j.at("revision").get<std::uint64_t>();
    r.session = decode_session(j.at("session"));
    if (!j.at("plan").is_null()) r.plan = decode_plan(j.at("plan"));
    return r;
}

} // namespace codec

namespace detail {

/// Splits a session log into payloads. A torn trailing record is dropped.
inline std::vector<std::string_view> split_frames(std::string_view bytes, std::size_t* consumed = nullptr) {
    std::vector<std::string_view> frames;
    std::size_t pos = 0;
    while (bytes.size() - pos >= 4) {
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        const std::uint32_t len = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                                  (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
        if (bytes.size() - pos - 4 < len) break;
        frames.push_back(bytes.substr(pos + 4, len));
        pos += 4 + len;
    }
    if (consumed) *consumed = pos;
    return frames;
}

inline std::string frame(std::string_view payload) {
    const auto len = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(payload.size() + 4);
    out += static_cast<char>((len >> 24) & 0xFF);
    out += static_cast<char>((len >> 16) & 0xFF);
    out += static_cast<char>((len >> 8) & 0xFF);
    out += static_cast<char>(len & 0xFF);
    out.append(payload);
    return out;
}

} // namespace detail

/// Append-only session persistence: `<data-dir>/sessions/<session-id>.log`, one
/// length-prefixed JSON record per committed revision; the highest revision wins.
///
/// Saves are serialized per session id and fsync'd before returning. Loads may run
/// concurrently with saves of other sessions.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path data_dir) : dir_(std::move(data_dir) / "sessions") {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw StorageFailure("cannot create " + dir_.string() + ": " + ec.message());
    }

    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    const std::filesystem::path& directory() const noexcept { return dir_; }

    /// Commits `record` as revision + 1. `record.revision` must equal the latest stored
    /// revision (0 for a new session). Throws RevisionConflict or StorageFailure.
    std::uint64_t save(const SessionRecord& record) {
        const auto& id = record.session.id;
        if (!is_valid_session_id(id)) throw StorageFailure("invalid session id '" + id + "'");
        auto& slot = slot_for(id);
        std::lock_guard lock(slot.mutex);
        if (!slot.latest) slot.latest = recover(id);
        if (record.revision != *slot.latest) throw RevisionConflict(*slot.latest, record.revision);

        SessionRecord stored = record;
        stored.revision = record.revision + 1;
        append(path_for(id), detail::frame(codec::encode(stored).dump()));
        slot.latest = stored.revision;
        return stored.revision;
    }

    /// Highest committed revision. Throws SessionNotFound.
    SessionRecord load(const std::string& id) const {
        if (!is_valid_session_id(id)) throw SessionNotFound(id);
        auto records = read_all(id);
        if (!records) throw SessionNotFound(id);
        return std::move(*records);
    }

    bool contains(const std::string& id) const {
        return is_valid_session_id(id) && std::filesystem::exists(path_for(id));
    }

    /// Latest state of every session, by start time then id.
    std::vector<SessionSummary> list_sessions(StateFilter filter = StateFilter::All) const {
        std::vector<SessionSummary> out;
        std::error_code ec;
        for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
            if (entry.path().extension() != ".log") continue;
            const auto id = entry.path().stem().string();
            if (!is_valid_session_id(id)) continue;
            const auto record = read_all(id);
            if (!record) continue;
            const auto state = record->session.state;
            if (filter == StateFilter::Active && state != SessionState::Active) continue;
            if (filter == StateFilter::Completed && state != SessionState::Completed) continue;
            out.push_back({id, state, record->session.started_at});
        }
        std::sort(out.begin(), out.end(), [](const SessionSummary& a, const SessionSummary& b) {
            return std::tie(a.started_at, a.id) < std::tie(b.started_at, b.id);
        });
        return out;
    }

    /// Saves are synced as they happen; kept for callers that want an explicit barrier.
    void flush() {
        const int fd = ::open(dir_.c_str(), O_RDONLY | O_DIRECTORY);
        if (fd >= 0) {
            ::fsync(fd);
            ::close(fd);
        }
    }

private:
    struct Slot {
        std::mutex mutex;
        std::optional<std::uint64_t> latest;
    };

    std::filesystem::path path_for(const std::string& id) const { return dir_ / (id + ".log"); }

    Slot& slot_for(const std::string& id) {
        std::lock_guard lock(slots_mutex_);
        auto& slot = slots_[id];
        if (!slot) slot = std::make_unique<Slot>();
        return *slot;
    }

    std::optional<SessionRecord> read_all(const std::string& id) const {
        std::ifstream in(path_for(id), std::ios::binary);
        if (!in) return std::nullopt;
        const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::optional<SessionRecord> best;
        for (auto payload : detail::split_frames(bytes)) {
            try {
                auto record = decoding([&] { return codec::decode_record(Json::parse(payload)); });
                if (!best || record.revision > best->revision) best = std::move(record);
            } catch (const DecodeError&) {
                // a frame that fails to decode is skipped, like a torn tail
            } catch (const Json::exception&) {
            }
        }
        return best;
    }

    // Drops a torn tail left by a crash so later appends stay frame-aligned.
    std::uint64_t recover(const std::string& id) const {
        const auto path = path_for(id);
        std::ifstream in(path, std::ios::binary);
        if (!in) return 0;
        const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::size_t consumed = 0;
        detail::split_frames(bytes, &consumed);
        if (consumed < bytes.size()) {
            std::error_code ec;
            std::filesystem::resize_file(path, consumed, ec);
            if (ec) throw StorageFailure("truncate " + path.string() + ": " + ec.message());
        }
        auto record = read_all(id);
        return record ? record->revision : 0;
    }

    static void append(const std::filesystem::path& path, const std::string& bytes) {
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd < 0) throw StorageFailure("open " + path.string() + ": " + std::strerror(errno));
        std::size_t written = 0;
        while (written < bytes.size()) {
            const auto n = ::write(fd, bytes.data() + written, bytes.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                const std::string err = std::strerror(errno);
                ::close(fd);
                throw StorageFailure("write " + path.string() + ": " + err);
            }
            written += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            const std::string err = std::strerror(errno);
            ::close(fd);
            throw StorageFailure("fsync " + path.string() + ": " + err);
        }
        ::close(fd);
    }

    std::filesystem::path dir_;
    std::mutex slots_mutex_;
    std::map<std::string, std::unique_ptr<Slot>> slots_;
};

} // namespace smartdoc

#endif // SMARTDOC_STORE_HPP
