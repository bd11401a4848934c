#include "hyphall/surface_group.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <set>

#include "hyphall/errors.hpp"

namespace hyphall {

namespace {

std::string word_key(const Word& w) {
  return std::string(reinterpret_cast<const char*>(w.data()), w.size());
}

// Mobius action of a complex 2x2 matrix.
cd mob(const Eigen::Matrix2cd& m, cd z) {
  return (m(0, 0) * z + m(0, 1)) / (m(1, 0) * z + m(1, 1));
}

// Unit-determinant disk isometry sending p to the origin.
Eigen::Matrix2cd centering(cd p) {
  double s = std::sqrt(1.0 - std::norm(p));
  Eigen::Matrix2cd m;
  m << 1.0 / s, -p / s, -std::conj(p) / s, 1.0 / s;
  return m;
}

// Orientation-preserving disk isometry with (p1, p2) -> (q1, q2); requires
// equal hyperbolic distances d(p1,p2) = d(q1,q2).  Returned as a real
// unimodular matrix acting on the half-plane.
Isometry point_pair_map(cd p1, cd p2, cd q1, cd q2) {
  Eigen::Matrix2cd t1 = centering(p1);
  Eigen::Matrix2cd t2 = centering(q1);
  cd a2 = mob(t1, p2);
  cd b2 = mob(t2, q2);
  if (std::abs(std::abs(a2) - std::abs(b2)) > 1e-9) {
    throw Error(ErrorKind::Construction,
                "side pairing: sides have different lengths");
  }
  double delta = std::arg(b2) - std::arg(a2);
  Eigen::Matrix2cd rot = Eigen::Matrix2cd::Zero();
  rot(0, 0) = std::polar(1.0, delta / 2.0);
  rot(1, 1) = std::polar(1.0, -delta / 2.0);
  Eigen::Matrix2cd md = t2.inverse() * rot * t1;
  // Conjugate by the Cayley map z = (w - i)/(w + i); the result is real.
  Eigen::Matrix2cd c, cinv;
  c << cd(1, 0), cd(0, -1), cd(1, 0), cd(0, 1);
  cinv << cd(0.5, 0), cd(0.5, 0), cd(0, 0.5), cd(0, -0.5);
  Eigen::Matrix2cd mr = cinv * md * c;
  double imag_norm = std::abs(mr(0, 0).imag()) + std::abs(mr(0, 1).imag()) +
                     std::abs(mr(1, 0).imag()) + std::abs(mr(1, 1).imag());
  if (imag_norm > 1e-9) {
    throw Error(ErrorKind::Construction,
                "side pairing did not conjugate to a real matrix");
  }
  double a = mr(0, 0).real(), b = mr(0, 1).real();
  double cc = mr(1, 0).real(), d = mr(1, 1).real();
  double det = a * d - b * cc;
  double s = 1.0 / std::sqrt(det);
  return Isometry(a * s, b * s, cc * s, d * s);
}

}  // namespace

std::string letter_name(int letter) {
  int j = letter >> 1;
  std::string name = (j % 2 == 0) ? "a" : "b";
  name += std::to_string(j / 2 + 1);
  if (letter & 1) name += "'";
  return name;
}

std::string word_name(const Word& w) {
  if (w.empty()) return "e";
  std::string s;
  for (size_t i = 0; i < w.size(); ++i) {
    if (i) s += ".";
    s += letter_name(w[i]);
  }
  return s;
}

Word word_inverse(const Word& w) {
  Word r(w.rbegin(), w.rend());
  for (auto& l : r) l = static_cast<std::uint8_t>(l ^ 1);
  return r;
}

bool shortlex_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

SurfaceGroup::SurfaceGroup(int genus) : genus_(genus) {
  if (genus < 2 || genus > 8) {
    throw Error(ErrorKind::Config, "genus must be between 2 and 8");
  }
  const int n = 4 * genus;
  const double cotn = 1.0 / std::tan(M_PI / n);
  circumradius_ = std::acosh(cotn * cotn);
  inradius_ = std::acosh(cotn);
  side_length_ = 2.0 * std::acosh(cotn);
  const double re = std::tanh(circumradius_ / 2.0);
  vertices_.resize(n);
  for (int k = 0; k < n; ++k) {
    vertices_[k] = std::polar(re, 2.0 * M_PI * k / n);
  }

  // Relator prod_j [a_j, b_j]; block j contributes sides labeled
  // a_j, b_j, a_j^-1, b_j^-1 in counterclockwise order.
  relator_.clear();
  for (int j = 0; j < genus; ++j) {
    relator_.push_back(static_cast<std::uint8_t>(4 * j));      // a_{j+1}
    relator_.push_back(static_cast<std::uint8_t>(4 * j + 2));  // b_{j+1}
    relator_.push_back(static_cast<std::uint8_t>(4 * j + 1));  // a inverse
    relator_.push_back(static_cast<std::uint8_t>(4 * j + 3));  // b inverse
  }

  std::vector<int> side_of_letter(n, -1);
  for (int k = 0; k < n; ++k) {
    int j = k / 4, m = k % 4;
    int letter = (m == 0) ? 4 * j : (m == 1) ? 4 * j + 2
                 : (m == 2)       ? 4 * j + 1
                                  : 4 * j + 3;
    side_of_letter[letter] = k;
  }

  // The pairing map for label x carries the side labeled x^-1 onto the
  // side labeled x with endpoints reversed (identified sides are traversed
  // in opposite boundary senses, so the translates tile).  With this
  // orientation the vertex cycle relation comes out as prod_j [a_j,
  // b_j^-1], so the group generator for each b-label is taken to be the
  // inverse pairing map; then the standard commutator relator holds.
  generators_.assign(n, Isometry());
  for (int l = 0; l < n; l += 2) {
    int t = side_of_letter[l];
    int s = side_of_letter[l ^ 1];
    cd p1 = vertices_[s], p2 = vertices_[(s + 1) % n];
    cd q1 = vertices_[(t + 1) % n], q2 = vertices_[t];
    Isometry m = point_pair_map(p1, p2, q1, q2);
    HPoint i1 = m.apply(HPoint{p1, Model::Disk});
    HPoint i2 = m.apply(HPoint{p2, Model::Disk});
    if (hyp_distance(i1, HPoint{q1, Model::Disk}) > 1e-9 ||
        hyp_distance(i2, HPoint{q2, Model::Disk}) > 1e-9) {
      throw Error(ErrorKind::Construction,
                  "side pairing failed to map endpoints");
    }
    bool b_label = (l % 4) == 2;
    generators_[l] = b_label ? m.inverse() : m;
    generators_[l ^ 1] = b_label ? m : m.inverse();
  }
  Isometry rel = evaluate(relator_);
  if (rel.projective_distance(Isometry()) > 1e-9) {
    throw Error(ErrorKind::Construction,
                "side pairings do not satisfy the surface relation");
  }
  // Freeness guards: every generator is a hyperbolic translation carrying
  // the polygon to the neighbor sharing the paired side, so it moves the
  // center by exactly twice the inradius.
  HPoint u = base_point();
  for (int l = 0; l < n; ++l) {
    double trace = std::abs(generators_[l].a() + generators_[l].d());
    double disp = hyp_distance(u, generators_[l].apply(u));
    if (trace <= 2.0 || std::abs(disp - 2.0 * inradius_) > 1e-9) {
      throw Error(ErrorKind::Construction,
                  "side pairing is not a tile-adjacency translation");
    }
  }

  relator_cycles_.clear();
  for (Word base : {relator_, word_inverse(relator_)}) {
    for (int r = 0; r < n; ++r) {
      Word rot(base.begin() + r, base.end());
      rot.insert(rot.end(), base.begin(), base.begin() + r);
      relator_cycles_.push_back(std::move(rot));
    }
  }
}

const Isometry& SurfaceGroup::generator(int letter) const {
  if (letter < 0 || letter >= alphabet_size()) {
    throw Error(ErrorKind::Config, "letter out of range");
  }
  return generators_[letter];
}

cd SurfaceGroup::polygon_vertex(int k) const {
  int n = alphabet_size();
  return vertices_[((k % n) + n) % n];
}

Isometry SurfaceGroup::evaluate(const Word& w) const {
  check_word(w);
  Isometry m;
  for (auto l : w) m = m.compose(generators_[l]);
  return m;
}

void SurfaceGroup::check_word(const Word& w) const {
  for (auto l : w) {
    if (l >= alphabet_size()) {
      throw Error(ErrorKind::Config, "word contains an invalid letter");
    }
  }
}

Word SurfaceGroup::free_reduce(Word w) const {
  check_word(w);
  Word out;
  out.reserve(w.size());
  for (auto l : w) {
    if (!out.empty() && out.back() == (l ^ 1)) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  return out;
}

Word SurfaceGroup::dehn_shrink(Word w) const {
  const int n = 4 * genus_;
  const int half = 2 * genus_;
  bool changed = true;
  int guard = 10 * static_cast<int>(w.size()) + 100;
  while (changed) {
    if (--guard < 0) {
      throw Error(ErrorKind::InternalConsistency, "dehn reduction stalled");
    }
    changed = false;
    int len = static_cast<int>(w.size());
    for (int bl = std::min(len, n); bl > half && !changed; --bl) {
      for (int i = 0; i + bl <= len && !changed; ++i) {
        for (const Word& c : relator_cycles_) {
          if (std::memcmp(w.data() + i, c.data(), bl) != 0) continue;
          // w[i..i+bl) equals the inverse of the cycle's complement, which
          // is strictly shorter; substitute and restart.
          Word next(w.begin(), w.begin() + i);
          Word tail(c.begin() + bl, c.end());
          Word repl = word_inverse(tail);
          next.insert(next.end(), repl.begin(), repl.end());
          next.insert(next.end(), w.begin() + i + bl, w.end());
          w = free_reduce(next);
          changed = true;
          break;
        }
      }
    }
  }
  return w;
}

Word SurfaceGroup::reduce(Word w) const {
  const int half = 2 * genus_;
  w = dehn_shrink(free_reduce(std::move(w)));
  // Geodesic representatives of one element differ by equal-length rewrites
  // that trade half of a relator cycle for the other half; close under
  // those moves and keep the ShortLex-least word.  A rewrite that exposes a
  // longer-than-half subword shortens the word; restart from there.
  for (;;) {
    std::set<std::string> seen;
    std::deque<Word> queue;
    seen.insert(word_key(w));
    queue.push_back(w);
    Word best = w;
    Word shrunk;
    bool found_shorter = false;
    while (!queue.empty() && !found_shorter) {
      Word v = queue.front();
      queue.pop_front();
      int len = static_cast<int>(v.size());
      for (int i = 0; i + half <= len && !found_shorter; ++i) {
        for (const Word& c : relator_cycles_) {
          if (std::memcmp(v.data() + i, c.data(), half) != 0) continue;
          Word next(v.begin(), v.begin() + i);
          Word tail(c.begin() + half, c.end());
          Word repl = word_inverse(tail);
          next.insert(next.end(), repl.begin(), repl.end());
          next.insert(next.end(), v.begin() + i + half, v.end());
          next = dehn_shrink(free_reduce(std::move(next)));
          if (next.size() < w.size()) {
            shrunk = std::move(next);
            found_shorter = true;
            break;
          }
          auto key = word_key(next);
          if (seen.insert(key).second) {
            if (shortlex_less(next, best)) best = next;
            queue.push_back(std::move(next));
          }
        }
      }
      if (seen.size() > 100000) {
        throw Error(ErrorKind::InternalConsistency,
                    "geodesic rewrite closure exploded");
      }
    }
    if (!found_shorter) return best;
    w = std::move(shrunk);
  }
}

std::vector<int> SurfaceGroup::abelianization(const Word& w) const {
  check_word(w);
  std::vector<int> ab(2 * genus_, 0);
  for (auto l : w) {
    int j = l >> 1;
    int slot = (j % 2 == 0) ? j / 2 : genus_ + j / 2;
    ab[slot] += (l & 1) ? -1 : 1;
  }
  return ab;
}

Ball::Ball(const SurfaceGroup& group, int radius) : group_(&group), radius_(radius) {
  if (radius < 0 || radius > 12) {
    throw Error(ErrorKind::Config, "ball radius must be between 0 and 12");
  }
  const int n = group.alphabet_size();
  const int g = group.genus();

  words_.push_back(Word{});
  matrices_.push_back(Isometry());
  index_of_[word_key(Word{})] = 0;
  neighbors_.assign(static_cast<size_t>(n), -1);

  for (int idx = 0; idx < static_cast<int>(words_.size()); ++idx) {
    if (static_cast<int>(words_[idx].size()) == radius_) continue;
    const Word base = words_[idx];  // by value: words_ may reallocate below
    for (int l = 0; l < n; ++l) {
      if (!base.empty() && base.back() == (l ^ 1)) continue;  // parent edge
      Word cand = base;
      cand.push_back(static_cast<std::uint8_t>(l));
      Word canon = group.reduce(cand);
      auto it = index_of_.find(word_key(canon));
      if (it != index_of_.end()) {
        link(idx, l, it->second);
        continue;
      }
      if (canon.size() != cand.size() || canon != cand) {
        // Breadth-first order must reach the ShortLex-least geodesic first,
        // and any shorter form would already be present.
        throw Error(ErrorKind::InternalConsistency,
                    "ball search missed a normal form");
      }
      if (words_.size() >= 400000) {
        throw Error(ErrorKind::Config, "ball too large");
      }
      int fresh = static_cast<int>(words_.size());
      words_.push_back(std::move(cand));
      matrices_.push_back(matrices_[idx].compose(group.generator(l)));
      index_of_[word_key(words_[fresh])] = fresh;
      neighbors_.resize(neighbors_.size() + n, -1);
      link(idx, l, fresh);
    }
  }

  const int count = static_cast<int>(words_.size());
  // Base-point orbit: image of i under (a,b;c,d) is ((ac+bd) + i)/(c^2+d^2);
  // the vertical part is a pure reciprocal, accurate at any depth.
  orbit_x_.resize(count);
  orbit_y_.resize(count);
  orbit_disk_.resize(count);
  for (int i = 0; i < count; ++i) {
    const Isometry& m = matrices_[i];
    double den = m.c() * m.c() + m.d() * m.d();
    orbit_x_[i] = (m.a() * m.c() + m.b() * m.d()) / den;
    orbit_y_[i] = 1.0 / den;
    orbit_disk_[i] = cayley_to_disk(cd(orbit_x_[i], orbit_y_[i]));
  }

  sizes_.assign(radius_ + 1, 0);
  for (int i = 0; i < count; ++i) {
    int d = depth(i);
    if (i > 0 && (d < depth(i - 1) ||
                  (d == depth(i - 1) && !shortlex_less(words_[i - 1], words_[i])))) {
      throw Error(ErrorKind::InternalConsistency, "ball ordering violated");
    }
    sizes_[d] += 1;
  }
  for (int r = 1; r <= radius_; ++r) sizes_[r] += sizes_[r - 1];

  inverse_.resize(count);
  for (int i = 0; i < count; ++i) {
    Word inv = group.reduce(word_inverse(words_[i]));
    auto it = index_of_.find(word_key(inv));
    if (it == index_of_.end()) {
      throw Error(ErrorKind::InternalConsistency, "ball is not symmetric");
    }
    inverse_[i] = it->second;
  }

  abel_.assign(static_cast<size_t>(count) * 2 * g, 0);
  for (int i = 0; i < count; ++i) {
    std::vector<int> ab = group.abelianization(words_[i]);
    std::copy(ab.begin(), ab.end(), abel_.begin() + static_cast<size_t>(i) * 2 * g);
  }

  delta_min_ = 0.0;
  for (int i = 1; i < count; ++i) {
    double dx = orbit_x_[i];
    double dy = orbit_y_[i] - 1.0;
    double chord = std::sqrt(dx * dx + dy * dy);
    double d = 2.0 * std::asinh(0.5 * chord / std::sqrt(orbit_y_[i]));
    if (i == 1 || d < delta_min_) delta_min_ = d;
  }
}

void Ball::link(int from, int letter, int to) {
  const int n = group_->alphabet_size();
  neighbors_[static_cast<size_t>(from) * n + letter] = to;
  neighbors_[static_cast<size_t>(to) * n + (letter ^ 1)] = from;
}

int Ball::size_at(int r) const {
  if (r < 0 || r > radius_) {
    throw Error(ErrorKind::Config, "sub-ball radius out of range");
  }
  return sizes_[r];
}

HPoint Ball::orbit_point(int index) const {
  return HPoint{cd(orbit_x_[index], orbit_y_[index]), Model::HalfPlane};
}

int Ball::find(const Word& w) const {
  Word canon = group_->reduce(w);
  auto it = index_of_.find(word_key(canon));
  return it == index_of_.end() ? -1 : it->second;
}

int Ball::right_step(int index, int letter) const {
  return neighbors_[static_cast<size_t>(index) * group_->alphabet_size() + letter];
}

int Ball::left_step(int letter, int index) const {
  // letter * x = (x^-1 * letter^-1)^-1, a single right step on inverses.
  int step = right_step(inverse_[index], letter ^ 1);
  return step < 0 ? -1 : inverse_[step];
}

int Ball::product(int index_a, int index_b) const {
  const Word& wa = words_[index_a];
  int cur = index_b;
  for (int k = static_cast<int>(wa.size()) - 1; k >= 0; --k) {
    cur = left_step(wa[k], cur);
    if (cur < 0) break;
  }
  if (cur >= 0) return cur;
  // The stepping path can leave the ball even when the product is inside;
  // settle it through the normal form.
  Word w = wa;
  w.insert(w.end(), words_[index_b].begin(), words_[index_b].end());
  return find(w);
}

const int* Ball::abelianization(int index) const {
  return abel_.data() + static_cast<size_t>(index) * 2 * group_->genus();
}

}  // namespace hyphall
