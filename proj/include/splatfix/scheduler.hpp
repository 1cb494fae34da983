#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatfix/camera.hpp"
#include "splatfix/rng.hpp"

// Interleaved reference/novel supervision stream with random sample drop.
namespace splatfix::scheduler {

inline constexpr double kInitialRatio = 1e-6;
inline constexpr double kDenominatorGuard = 1e-12;

// Reference: 1 - min(1, alpha / r). Novel: 1 - min(1, (1 - alpha) / (1 - r)).
// Denominators are clamped to 1e-12, so a novel draw at r = 1 is dropped with
// probability 1 only when alpha = 1. Throws std::invalid_argument when alpha
// or r lies outside [0, 1].
double drop_probability(ViewRole role, double alpha, double r);

// Thrown when the schedule drops every candidate for too many consecutive
// stack refills.
class ScheduleStarvation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduleOptions {
    // Count every drawn sample in r instead of only kept ones.
    bool update_on_all_draws = false;
    int max_empty_refills = 100;
};

struct ScheduleEvent {
    std::uint64_t request = 0;  // index of the next_sample call
    std::string view_id;
    ViewRole role = ViewRole::reference;
    bool kept = false;
    double drop_probability = 0.0;
    double r = 0.0;  // after this draw
};

class SampleSchedule {
public:
    // Throws std::invalid_argument for alpha outside [0, 1], duplicate ids, or
    // no views at all.
    SampleSchedule(std::vector<std::string> ref_ids, std::vector<std::string> novel_ids, double alpha,
                   std::uint64_t seed, ScheduleOptions options = {});

    // Next kept view id. Throws ScheduleStarvation.
    std::string next_sample();

    double alpha() const { return alpha_; }
    // Current kept (or drawn) reference ratio; 1e-6 before the first count.
    double ratio() const;
    std::uint64_t counted_reference() const { return ref_count_; }
    std::uint64_t counted_total() const { return total_count_; }
    std::uint64_t kept_reference() const { return kept_ref_; }
    std::uint64_t kept_total() const { return kept_total_; }
    std::size_t stack_size() const { return stack_.size(); }
    ViewRole role_of(const std::string& id) const;
    const std::vector<std::string>& view_ids() const { return ids_; }

    void set_tracing(bool on) { tracing_ = on; }
    const std::vector<ScheduleEvent>& trace() const { return trace_; }

private:
    void refill();

    std::vector<std::string> ids_;  // reference ids, then novel ids
    std::size_t ref_size_;
    double alpha_;
    ScheduleOptions options_;
    Rng rng_;
    std::vector<std::size_t> stack_;  // indices into ids_, popped from the back
    std::uint64_t ref_count_ = 0;
    std::uint64_t total_count_ = 0;
    std::uint64_t kept_ref_ = 0;
    std::uint64_t kept_total_ = 0;
    std::uint64_t requests_ = 0;
    bool tracing_ = false;
    std::vector<ScheduleEvent> trace_;
};

// Kept occurrences of every view over `horizon` further samples, taken from a
// copy so that `schedule` itself does not advance.
std::map<std::string, std::uint64_t> epoch_coverage(const SampleSchedule& schedule,
                                                    std::uint64_t horizon);

// CSV with header "request,view_id,role,decision,drop_probability,r".
void write_trace_csv(std::ostream& out, const std::vector<ScheduleEvent>& trace);

}  // namespace splatfix::scheduler
