#include "waveadapt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace waveadapt {

MacroMesh::MacroMesh(std::vector<double> breakpoints) : breakpoints_(std::move(breakpoints)) {
    if (breakpoints_.size() < 2) {
        throw std::invalid_argument("macro mesh needs at least one element");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
        if (!(breakpoints_[i] > breakpoints_[i - 1])) {
            throw std::invalid_argument("macro breakpoints must be strictly increasing");
        }
    }
}

MacroMesh MacroMesh::uniform(double a, double b, std::size_t n) {
    if (n == 0 || !(a < b)) {
        throw std::invalid_argument("uniform macro mesh needs a < b and n > 0");
    }
    std::vector<double> x(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n);
    }
    x.back() = b;
    return MacroMesh(std::move(x));
}

ElementKey ElementKey::parent() const {
    if (level == 0) {
        throw std::logic_error("macro element has no parent");
    }
    return {macro, level - 1, index >> 1};
}

ElementKey ElementKey::child(int side) const {
    return {macro, level + 1, (index << 1) | static_cast<std::uint64_t>(side & 1)};
}

ElementKey ElementKey::sibling() const {
    if (level == 0) {
        throw std::logic_error("macro element has no sibling");
    }
    return {macro, level, index ^ 1U};
}

ElementKey ElementKey::ancestor(std::uint32_t at_level) const {
    if (at_level > level) {
        throw std::logic_error("ancestor level deeper than node");
    }
    return {macro, at_level, index >> (level - at_level)};
}

bool ElementKey::contains(const ElementKey& other) const {
    return macro == other.macro && level <= other.level &&
           (other.index >> (other.level - level)) == index;
}

std::strong_ordering operator<=>(const ElementKey& lhs, const ElementKey& rhs) {
    if (lhs.macro != rhs.macro) {
        return lhs.macro <=> rhs.macro;
    }
    const std::uint32_t common = std::max(lhs.level, rhs.level);
    const std::uint64_t lt = lhs.index << (common - lhs.level);
    const std::uint64_t rt = rhs.index << (common - rhs.level);
    if (lt != rt) {
        return lt <=> rt;
    }
    return lhs.level <=> rhs.level;
}

Forest::Forest(MacroMesh macro) : macro_(std::move(macro)) {}

Interval Forest::interval(const ElementKey& key) const {
    const double x0 = macro_.left(key.macro);
    const double w = macro_.width(key.macro);
    const double l = x0 + w * std::ldexp(static_cast<double>(key.index), -static_cast<int>(key.level));
    const double r = key.index + 1 == (std::uint64_t{1} << key.level)
                         ? macro_.right(key.macro)
                         : x0 + w * std::ldexp(static_cast<double>(key.index + 1),
                                               -static_cast<int>(key.level));
    return {l, r};
}

double Forest::size(const ElementKey& key) const {
    return std::ldexp(macro_.width(key.macro), -static_cast<int>(key.level));
}

ElementKey Forest::locate(double x, std::uint32_t level) const {
    const auto& bp = macro_.breakpoints();
    if (x < bp.front() || x > bp.back()) {
        throw std::out_of_range("point outside the domain");
    }
    auto it = std::upper_bound(bp.begin(), bp.end(), x);
    std::size_t m = static_cast<std::size_t>(std::distance(bp.begin(), it));
    m = m == 0 ? 0 : m - 1;
    m = std::min(m, macro_.size() - 1);
    const double frac = (x - macro_.left(m)) / macro_.width(m);
    const std::uint64_t count = std::uint64_t{1} << level;
    auto idx = static_cast<std::uint64_t>(std::floor(frac * static_cast<double>(count)));
    idx = std::min(idx, count - 1);
    ElementKey key{static_cast<std::uint32_t>(m), level, idx};
    // floor() can be off by one next to a node; settle with exact endpoints.
    while (key.index > 0 && interval(key).left > x) {
        --key.index;
    }
    while (key.index + 1 < count && interval(key).right <= x) {
        ++key.index;
    }
    return key;
}

MeshSnapshot::MeshSnapshot(ForestPtr forest, std::vector<ElementKey> active)
    : forest_(std::move(forest)), active_(std::move(active)) {
    if (!forest_) {
        throw std::invalid_argument("snapshot requires a forest");
    }
    std::sort(active_.begin(), active_.end());
    // Cover check: consecutive keys must abut exactly.
    const auto& macro = forest_->macro();
    double expect = macro.a();
    for (const auto& k : active_) {
        if (k.macro >= macro.size() || k.level > Forest::kLevelLimit ||
            k.index >= (std::uint64_t{1} << k.level)) {
            throw std::invalid_argument("snapshot key outside the forest");
        }
        const Interval iv = forest_->interval(k);
        if (iv.left != expect) {
            throw std::invalid_argument("snapshot elements do not form a partition");
        }
        expect = iv.right;
    }
    if (expect != macro.b()) {
        throw std::invalid_argument("snapshot elements do not cover the domain");
    }
}

MeshSnapshot MeshSnapshot::macro(ForestPtr forest) { return uniform(std::move(forest), 0); }

MeshSnapshot MeshSnapshot::uniform(ForestPtr forest, std::uint32_t level) {
    std::vector<ElementKey> keys;
    const std::size_t n = forest->macro().size();
    const std::uint64_t per = std::uint64_t{1} << level;
    keys.reserve(n * per);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::uint64_t i = 0; i < per; ++i) {
            keys.push_back({static_cast<std::uint32_t>(m), level, i});
        }
    }
    return MeshSnapshot(std::move(forest), std::move(keys));
}

std::vector<double> MeshSnapshot::nodes() const {
    std::vector<double> x;
    x.reserve(active_.size() + 1);
    for (const auto& k : active_) {
        x.push_back(forest_->interval(k).left);
    }
    x.push_back(forest_->macro().b());
    return x;
}

std::ptrdiff_t MeshSnapshot::find(const ElementKey& key) const {
    auto it = std::lower_bound(active_.begin(), active_.end(), key);
    if (it != active_.end() && *it == key) {
        return std::distance(active_.begin(), it);
    }
    return -1;
}

std::size_t MeshSnapshot::locate(double x) const {
    const auto& macro = forest_->macro();
    if (x < macro.a() || x > macro.b()) {
        throw std::out_of_range("point outside the domain");
    }
    std::size_t lo = 0;
    std::size_t hi = active_.size();
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (forest_->interval(active_[mid]).left <= x) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

std::uint32_t MeshSnapshot::max_level() const {
    std::uint32_t lvl = 0;
    for (const auto& k : active_) {
        lvl = std::max(lvl, k.level);
    }
    return lvl;
}

bool MeshSnapshot::operator==(const MeshSnapshot& other) const {
    return forest_ == other.forest_ && active_ == other.active_;
}

namespace {

void require_same_forest(const MeshSnapshot& s1, const MeshSnapshot& s2) {
    if (!s1.same_forest(s2)) {
        throw IncompatibleMeshError("snapshots belong to different forests");
    }
}

// Walks two cuts of one forest in lockstep. Overlapping elements are always nested.
template <bool Finer>
MeshSnapshot merge_cuts(const MeshSnapshot& s1, const MeshSnapshot& s2) {
    require_same_forest(s1, s2);
    const auto& a = s1.elements();
    const auto& b = s2.elements();
    std::vector<ElementKey> out;
    out.reserve(std::max(a.size(), b.size()));
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            out.push_back(a[i]);
            ++i;
            ++j;
        } else if (a[i].contains(b[j])) {
            // a[i] is the coarser one; b covers it with several elements.
            const ElementKey outer = a[i];
            if (!Finer) {
                out.push_back(outer);
            }
            while (j < b.size() && outer.contains(b[j])) {
                if (Finer) {
                    out.push_back(b[j]);
                }
                ++j;
            }
            ++i;
        } else if (b[j].contains(a[i])) {
            const ElementKey outer = b[j];
            if (!Finer) {
                out.push_back(outer);
            }
            while (i < a.size() && outer.contains(a[i])) {
                if (Finer) {
                    out.push_back(a[i]);
                }
                ++i;
            }
            ++j;
        } else {
            throw IncompatibleMeshError("snapshots are not nested cuts of one forest");
        }
    }
    return MeshSnapshot(s1.forest(), std::move(out));
}

}  // namespace

RefineResult refine(const MeshSnapshot& s, std::span<const ElementKey> marked,
                    std::uint32_t depth_max) {
    std::vector<ElementKey> marks(marked.begin(), marked.end());
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    for (const auto& k : marks) {
        if (!s.is_active(k)) {
            throw InvalidMarkError("refinement mark is not an active element");
        }
    }
    const std::uint32_t cap = std::min(depth_max, Forest::kLevelLimit);
    RefineResult result;
    std::vector<ElementKey> out;
    out.reserve(s.size() + marks.size());
    std::size_t mi = 0;
    for (const auto& k : s.elements()) {
        const bool is_marked = mi < marks.size() && marks[mi] == k;
        if (is_marked) {
            ++mi;
        }
        if (is_marked && k.level < cap) {
            out.push_back(k.child(0));
            out.push_back(k.child(1));
            result.refined.push_back(k);
        } else {
            if (is_marked) {
                result.skipped.push_back(k);
            }
            out.push_back(k);
        }
    }
    result.mesh = MeshSnapshot(s.forest(), std::move(out));
    return result;
}

CoarsenResult coarsen(const MeshSnapshot& s, std::span<const ElementKey> marked) {
    std::vector<ElementKey> marks(marked.begin(), marked.end());
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());
    auto is_marked = [&](const ElementKey& k) {
        return std::binary_search(marks.begin(), marks.end(), k);
    };
    CoarsenResult result;
    for (const auto& k : marks) {
        const bool ok = s.is_active(k) && k.level > 0 && s.is_active(k.sibling()) &&
                        is_marked(k.sibling());
        if (!ok) {
            result.skipped.push_back(k);
        }
    }
    const auto& act = s.elements();
    std::vector<ElementKey> out;
    out.reserve(act.size());
    for (std::size_t i = 0; i < act.size(); ++i) {
        const ElementKey& k = act[i];
        // A mergeable pair is adjacent in the cut: left child followed by right child.
        if (k.level > 0 && (k.index & 1U) == 0 && i + 1 < act.size() && act[i + 1] == k.sibling() &&
            is_marked(k) && is_marked(act[i + 1])) {
            out.push_back(k.parent());
            result.coarsened.push_back(k.parent());
            ++i;
        } else {
            out.push_back(k);
        }
    }
    result.mesh = MeshSnapshot(s.forest(), std::move(out));
    return result;
}

MeshSnapshot common_refinement(const MeshSnapshot& s1, const MeshSnapshot& s2) {
    return merge_cuts<true>(s1, s2);
}

MeshSnapshot common_coarsening(const MeshSnapshot& s1, const MeshSnapshot& s2) {
    return merge_cuts<false>(s1, s2);
}

ElementKey smallest_containing_element(const MeshSnapshot& s, const ElementKey& key) {
    const auto& macro = s.forest()->macro();
    if (key.macro >= macro.size() || key.index >= (std::uint64_t{1} << key.level)) {
        throw std::out_of_range("element outside the domain");
    }
    for (std::uint32_t lvl = key.level + 1; lvl-- > 0;) {
        const ElementKey anc = key.ancestor(lvl);
        if (s.is_active(anc)) {
            return anc;
        }
    }
    throw std::out_of_range("element is coarser than the snapshot; no active element contains it");
}

bool refines(const MeshSnapshot& fine, const MeshSnapshot& coarse) {
    require_same_forest(fine, coarse);
    return common_refinement(fine, coarse) == fine;
}

void write_snapshot_csv(std::ostream& os, long step, double t, const MeshSnapshot& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Interval iv = s.interval(i);
        os << step << ',' << t << ',' << iv.left << ',' << iv.right << ',' << s[i].level << '\n';
    }
}

}  // namespace waveadapt
