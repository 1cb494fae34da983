#include "splatfix/scheduler.hpp"

#include <algorithm>
#include <iomanip>
#include <set>

namespace splatfix::scheduler {

double drop_probability(ViewRole role, double alpha, double r) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("drop_probability: alpha must lie in [0, 1]");
    }
    if (!(r >= 0.0 && r <= 1.0)) {
        throw std::invalid_argument("drop_probability: r must lie in [0, 1]");
    }
    if (role == ViewRole::reference) {
        return 1.0 - std::min(1.0, alpha / std::max(r, kDenominatorGuard));
    }
    return 1.0 - std::min(1.0, (1.0 - alpha) / std::max(1.0 - r, kDenominatorGuard));
}

SampleSchedule::SampleSchedule(std::vector<std::string> ref_ids, std::vector<std::string> novel_ids,
                               double alpha, std::uint64_t seed, ScheduleOptions options)
    : ref_size_(ref_ids.size()), alpha_(alpha), options_(options), rng_(seed) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("SampleSchedule: alpha must lie in [0, 1]");
    }
    if (options.max_empty_refills < 1) {
        throw std::invalid_argument("SampleSchedule: max_empty_refills must be at least 1");
    }
    ids_ = std::move(ref_ids);
    ids_.insert(ids_.end(), novel_ids.begin(), novel_ids.end());
    if (ids_.empty()) {
        throw std::invalid_argument("SampleSchedule: no views to schedule");
    }
    const std::set<std::string> unique(ids_.begin(), ids_.end());
    if (unique.size() != ids_.size()) {
        throw std::invalid_argument("SampleSchedule: duplicate view id");
    }
}

double SampleSchedule::ratio() const {
    if (total_count_ == 0) {
        return kInitialRatio;
    }
    return static_cast<double>(ref_count_) / static_cast<double>(total_count_);
}

ViewRole SampleSchedule::role_of(const std::string& id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) {
        throw std::invalid_argument("SampleSchedule: unknown view id '" + id + "'");
    }
    return static_cast<std::size_t>(it - ids_.begin()) < ref_size_ ? ViewRole::reference
                                                                    : ViewRole::novel;
}

void SampleSchedule::refill() {
    stack_.resize(ids_.size());
    for (std::size_t i = 0; i < stack_.size(); ++i) {
        stack_[i] = i;
    }
    rng_.shuffle(std::span<std::size_t>(stack_));
}

std::string SampleSchedule::next_sample() {
    const std::uint64_t request = requests_++;
    int empty_refills = 0;
    bool kept_since_refill = true;
    for (;;) {
        if (stack_.empty()) {
            if (!kept_since_refill && ++empty_refills >= options_.max_empty_refills) {
                throw ScheduleStarvation("sample schedule dropped every view for " +
                                         std::to_string(empty_refills) +
                                         " consecutive refills (alpha = " + std::to_string(alpha_) +
                                         ")");
            }
            refill();
            kept_since_refill = false;
        }
        const std::size_t idx = stack_.back();
        stack_.pop_back();
        const bool is_ref = idx < ref_size_;
        const ViewRole role = is_ref ? ViewRole::reference : ViewRole::novel;

        if (options_.update_on_all_draws) {
            ++total_count_;
            ref_count_ += is_ref ? 1 : 0;
        }
        const double p = drop_probability(role, alpha_, ratio());
        // p == 0 and p == 1 are decided without consuming randomness so that
        // the endpoint cases are exact.
        const bool kept = p <= 0.0 ? true : (p >= 1.0 ? false : rng_.uniform() >= p);
        if (kept && !options_.update_on_all_draws) {
            ++total_count_;
            ref_count_ += is_ref ? 1 : 0;
        }
        if (kept) {
            ++kept_total_;
            kept_ref_ += is_ref ? 1 : 0;
        }
        if (tracing_) {
            trace_.push_back({request, ids_[idx], role, kept, p, ratio()});
        }
        if (kept) {
            return ids_[idx];
        }
    }
}

std::map<std::string, std::uint64_t> epoch_coverage(const SampleSchedule& schedule,
                                                    std::uint64_t horizon) {
    SampleSchedule copy = schedule;
    copy.set_tracing(false);
    std::map<std::string, std::uint64_t> counts;
    for (const auto& id : schedule.view_ids()) {
        counts[id] = 0;
    }
    for (std::uint64_t i = 0; i < horizon; ++i) {
        ++counts[copy.next_sample()];
    }
    return counts;
}

void write_trace_csv(std::ostream& out, const std::vector<ScheduleEvent>& trace) {
    out << "request,view_id,role,decision,drop_probability,r\n";
    out << std::setprecision(17);
    for (const auto& e : trace) {
        out << e.request << ',' << e.view_id << ',' << to_string(e.role) << ','
            << (e.kept ? "kept" : "dropped") << ',' << e.drop_probability << ',' << e.r << '\n';
    }
}

}  // namespace splatfix::scheduler
