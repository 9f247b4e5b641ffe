#ifndef SMARTDOC_SCHEDULER_HPP
#define SMARTDOC_SCHEDULER_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "kb_model.hpp"
#include "timestamp.hpp"

namespace smartdoc {

struct DoseEvent {
    std::string medicine;
    Timestamp due;
    std::int64_t sequence = 1;  // 1-based, per medicine
    bool acknowledged = false;

    friend bool operator==(const DoseEvent&, const DoseEvent&) = default;
};

/// Dose timetable for one session, sorted by (due, medicine name).
struct ReminderPlan {
    std::string session_id;
    std::vector<DoseEvent> doses;

    friend bool operator==(const ReminderPlan&, const ReminderPlan&) = default;
};

class UnknownDose : public std::runtime_error {
public:
    UnknownDose(std::string medicine, std::int64_t sequence)
        : std::runtime_error("no dose #" + std::to_string(sequence) + " of '" + medicine + "'"),
          medicine_(std::move(medicine)), sequence_(sequence) {}

    const std::string& medicine() const noexcept { return medicine_; }
    std::int64_t sequence() const noexcept { return sequence_; }

private:
    std::string medicine_;
    std::int64_t sequence_;
};

/// ceil(duration / interval): the course's opening dose comes at `start`, and a partial
/// trailing interval still gets its dose.
inline std::int64_t dose_count(const MedicineDirective& m) {
    const auto i = m.interval.count();
    const auto d = m.duration.count();
    return (d + i - 1) / i;
}

inline ReminderPlan build_plan(std::span<const MedicineDirective> medicines, Timestamp start, std::string session_id) {
    ReminderPlan plan{std::move(session_id), {}};
    for (const auto& m : medicines) {
        const auto n = dose_count(m);
        for (std::int64_t k = 1; k <= n; ++k) plan.doses.push_back({m.name, start + (k - 1) * m.interval, k, false});
    }
    std::stable_sort(plan.doses.begin(), plan.doses.end(), [](const DoseEvent& a, const DoseEvent& b) {
        return std::tie(a.due, a.medicine) < std::tie(b.due, b.medicine);
    });
    return plan;
}

/// Unacknowledged doses with due <= now, in plan order.
inline std::vector<DoseEvent> due_reminders(const ReminderPlan& plan, Timestamp now) {
    std::vector<DoseEvent> out;
    for (const auto& d : plan.doses)
        if (!d.acknowledged && d.due <= now) out.push_back(d);
    return out;
}

/// The next `limit` unacknowledged doses due strictly after now.
inline std::vector<DoseEvent> upcoming_reminders(const ReminderPlan& plan, Timestamp now, std::size_t limit = 3) {
    std::vector<DoseEvent> out;
    for (const auto& d : plan.doses) {
        if (out.size() == limit) break;
        if (!d.acknowledged && d.due > now) out.push_back(d);
    }
    return out;
}

/// Marks one dose taken. Idempotent; throws UnknownDose if the pair is not in the plan.
inline ReminderPlan acknowledge(ReminderPlan plan, std::string_view medicine, std::int64_t sequence) {
    auto it = std::find_if(plan.doses.begin(), plan.doses.end(), [&](const DoseEvent& d) {
        return d.medicine == medicine && d.sequence == sequence;
    });
    if (it == plan.doses.end()) throw UnknownDose(std::string(medicine), sequence);
    it->acknowledged = true;
    return plan;
}

} // namespace smartdoc

#endif // SMARTDOC_SCHEDULER_HPP
