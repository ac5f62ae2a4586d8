#include "twinforge/dynamics.hpp"

namespace twinforge::dynamics {

ComProperties com_properties(std::span<const SprungMass> masses) {
  if (masses.empty()) throw ConfigError("sprung mass set is empty");
  ComProperties out;
  Vec3 moment = Vec3::Zero();
  for (const auto& m : masses) {
    if (!(m.mass > 0.0)) throw ConfigError("sprung masses must be positive");
    out.total_mass += m.mass;
    moment += m.mass * m.position;
  }
  out.com = moment / out.total_mass;
  for (const auto& m : masses) {
    const Vec3 r = m.position - out.com;
    out.inertia.x() += m.mass * (r.y() * r.y() + r.z() * r.z());
    out.inertia.y() += m.mass * (r.x() * r.x() + r.z() * r.z());
    out.inertia.z() += m.mass * (r.x() * r.x() + r.y() * r.y());
  }
  return out;
}

}  // namespace twinforge::dynamics
