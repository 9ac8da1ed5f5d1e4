#include "c2lt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "c2lt/util.hpp"

namespace c2lt {

namespace {

constexpr double kValidGap = 0.010;   // attached parts face-to-face gap
constexpr double kDecoyGap = 0.005;   // decoy hovers nearer than the valid gap
constexpr double kDecoyExtent = 0.04;
constexpr double kClearance = 0.05;   // min spacing between unattached parts
constexpr int kStripSamples = 220;    // per side of each contact
constexpr int kDecoySamples = 130;

enum class PrimKind { Box, Cylinder, Sphere };

struct Primitive {
    PrimKind kind = PrimKind::Box;
    Vec3 center;
    Vec3 half;         // box half extents; cylinder: half.x=radius, half.z=half height
    double radius = 0; // sphere radius
    Rotation rot;      // decoys rotate; structural parts stay axis-aligned
    bool decoy = false;
};

struct Sample {
    Vec3 p;
    Vec3 n;
};

Vec3 axis_vec(int axis, double sign) {
    Vec3 v;
    v.set(axis, sign);
    return v;
}

void aabb_of(const Primitive& prim, Vec3& lo, Vec3& hi) {
    double r;
    switch (prim.kind) {
        case PrimKind::Box:
            r = std::sqrt(prim.half.x * prim.half.x + prim.half.y * prim.half.y +
                          prim.half.z * prim.half.z);
            break;
        case PrimKind::Cylinder:
            r = std::sqrt(prim.half.x * prim.half.x + prim.half.z * prim.half.z);
            break;
        default:
            r = prim.radius;
    }
    if (prim.kind != PrimKind::Box || prim.rot.orthonormality_error() > 0.0) {
        // Conservative bounding sphere for rotated parts.
        lo = prim.center - Vec3{r, r, r};
        hi = prim.center + Vec3{r, r, r};
        return;
    }
    lo = prim.center - prim.half;
    hi = prim.center + prim.half;
}

bool aabb_overlap(const Vec3& lo1, const Vec3& hi1, const Vec3& lo2, const Vec3& hi2,
                  double clearance) {
    return lo1.x - clearance < hi2.x && hi1.x + clearance > lo2.x &&
           lo1.y - clearance < hi2.y && hi1.y + clearance > lo2.y &&
           lo1.z - clearance < hi2.z && hi1.z + clearance > lo2.z;
}

void sample_box(const Primitive& b, int count, Rng& rng, std::vector<Sample>& out) {
    double ax = b.half.y * b.half.z, ay = b.half.x * b.half.z, az = b.half.x * b.half.y;
    double weights[6] = {ax, ax, ay, ay, az, az};
    double total = 2.0 * (ax + ay + az);
    for (int i = 0; i < count; ++i) {
        double pick = rng.uniform() * total;
        int face = 0;
        for (; face < 5; ++face) {
            if (pick < weights[face]) break;
            pick -= weights[face];
        }
        int axis = face / 2;
        double sign = face % 2 == 0 ? 1.0 : -1.0;
        Vec3 local;
        local.set(axis, sign * b.half[axis]);
        int u = (axis + 1) % 3, v = (axis + 2) % 3;
        local.set(u, rng.uniform(-b.half[u], b.half[u]));
        local.set(v, rng.uniform(-b.half[v], b.half[v]));
        Vec3 n_local = axis_vec(axis, sign);
        out.push_back({b.center + b.rot.apply(local), b.rot.apply(n_local)});
    }
}

void sample_cylinder(const Primitive& c, int count, Rng& rng, std::vector<Sample>& out) {
    double r = c.half.x, hh = c.half.z;
    double lateral = 2.0 * M_PI * r * 2.0 * hh;
    double cap = M_PI * r * r;
    double total = lateral + 2.0 * cap;
    for (int i = 0; i < count; ++i) {
        double pick = rng.uniform() * total;
        Vec3 local, n_local;
        if (pick < lateral) {
            double theta = rng.uniform(0.0, 2.0 * M_PI);
            local = {r * std::cos(theta), r * std::sin(theta), rng.uniform(-hh, hh)};
            n_local = {std::cos(theta), std::sin(theta), 0.0};
        } else {
            double sign = pick < lateral + cap ? 1.0 : -1.0;
            double rr = r * std::sqrt(rng.uniform());
            double theta = rng.uniform(0.0, 2.0 * M_PI);
            local = {rr * std::cos(theta), rr * std::sin(theta), sign * hh};
            n_local = {0.0, 0.0, sign};
        }
        out.push_back({c.center + c.rot.apply(local), c.rot.apply(n_local)});
    }
}

void sample_sphere(const Primitive& s, int count, Rng& rng, std::vector<Sample>& out) {
    for (int i = 0; i < count; ++i) {
        double z = rng.uniform(-1.0, 1.0);
        double theta = rng.uniform(0.0, 2.0 * M_PI);
        double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 dir{rr * std::cos(theta), rr * std::sin(theta), z};
        out.push_back({s.center + dir * s.radius, dir});
    }
}

void sample_primitive(const Primitive& prim, int count, Rng& rng, std::vector<Sample>& out) {
    switch (prim.kind) {
        case PrimKind::Box:
            sample_box(prim, count, rng, out);
            break;
        case PrimKind::Cylinder:
            sample_cylinder(prim, count, rng, out);
            break;
        case PrimKind::Sphere:
            sample_sphere(prim, count, rng, out);
            break;
    }
}

// Dense samples on the contact disk of a part surface. The disk lies in the
// plane orthogonal to `axis` at the part's facing surface.
void sample_contact_disk(const Primitive& prim, const Vec3& patch_center_lateral, int axis,
                         double sign, double patch_radius, int count, Rng& rng,
                         std::vector<Sample>& out) {
    for (int i = 0; i < count; ++i) {
        double rr = patch_radius * std::sqrt(rng.uniform());
        double theta = rng.uniform(0.0, 2.0 * M_PI);
        int u = (axis + 1) % 3, v = (axis + 2) % 3;
        Vec3 p = patch_center_lateral;
        p.set(u, p[u] + rr * std::cos(theta));
        p.set(v, p[v] + rr * std::sin(theta));
        if (prim.kind == PrimKind::Sphere) {
            // Project onto the sphere cap.
            Vec3 d = p - prim.center;
            double lat2 = 0.0;
            int uu = (axis + 1) % 3, vv = (axis + 2) % 3;
            lat2 = d[uu] * d[uu] + d[vv] * d[vv];
            double lat = std::sqrt(std::min(lat2, prim.radius * prim.radius * 0.96));
            double along = std::sqrt(prim.radius * prim.radius - lat * lat);
            Vec3 q = prim.center;
            q.set(uu, p[uu]);
            q.set(vv, p[vv]);
            q.set(axis, prim.center[axis] + sign * along);
            Vec3 n = (q - prim.center).normalized();
            out.push_back({q, n});
        } else {
            out.push_back({p, axis_vec(axis, sign)});
        }
    }
}

struct Builder {
    std::vector<Primitive> parts;
    std::vector<ContactSpec> contacts;  // raw-space; rescaled at the end
    std::vector<int> decoys;
    std::vector<std::pair<int, int>> collisions;
    std::vector<char> face_used;  // parts * 6

    bool face_free(int part, int face) const { return !face_used[size_t(part) * 6 + face]; }
    void mark_face(int part, int face) { face_used[size_t(part) * 6 + face] = 1; }
};

// Facing surface coordinate of a part along +/-axis.
double surface_coord(const Primitive& p, int axis, double sign) {
    switch (p.kind) {
        case PrimKind::Box:
            return p.center[axis] + sign * p.half[axis];
        case PrimKind::Cylinder:
            return p.center[axis] + sign * (axis == 2 ? p.half.z : p.half.x);
        default:
            return p.center[axis] + sign * p.radius;
    }
}

double lateral_half(const Primitive& p, int axis_lat) {
    switch (p.kind) {
        case PrimKind::Box:
            return p.half[axis_lat];
        case PrimKind::Cylinder:
            return axis_lat == 2 ? p.half.z : p.half.x;
        default:
            return p.radius;
    }
}

}  // namespace

SynthObject generate(const SynthParams& params) {
    if (params.density < 100) throw ConfigError("synth density must be >= 100");
    if (params.parts < 2 || params.parts > 12)
        throw ConfigError("synth parts must lie in [2,12]");
    Rng rng(derive_seed(params.seed, 0xc0de5ULL));

    Builder b;
    // Root plate.
    Primitive root;
    root.kind = PrimKind::Box;
    root.center = {0, 0, 0};
    root.half = {rng.uniform(0.30, 0.45), rng.uniform(0.30, 0.45), rng.uniform(0.07, 0.13)};
    b.parts.push_back(root);
    b.face_used.assign(6, 0);

    int placed_collision = -1;
    for (int part = 1; part < params.parts; ++part) {
        bool attached = false;
        for (int attempt = 0; attempt < 24 && !attached; ++attempt) {
            int parent = int(rng.index(b.parts.size()));
            if (b.parts[parent].kind == PrimKind::Sphere) continue;
            int face = int(rng.index(6));
            int axis = face / 2;
            double sign = face % 2 == 0 ? 1.0 : -1.0;
            if (b.parts[parent].kind == PrimKind::Cylinder && axis != 2) continue;
            if (!b.face_free(parent, face)) continue;

            // Child shape.
            Primitive child;
            double roll = rng.uniform();
            if (roll < 0.55) {
                child.kind = PrimKind::Box;
                child.half = {rng.uniform(0.09, 0.16), rng.uniform(0.09, 0.16),
                              rng.uniform(0.09, 0.16)};
            } else if (roll < 0.85) {
                child.kind = PrimKind::Cylinder;
                child.half = {rng.uniform(0.08, 0.14), 0.0, rng.uniform(0.09, 0.16)};
                child.half.y = child.half.x;
            } else {
                child.kind = PrimKind::Sphere;
                child.radius = rng.uniform(0.10, 0.16);
            }
            // Cylinders attach by a cap: orient the axis along the contact.
            if (child.kind == PrimKind::Cylinder && axis != 2) {
                // Keep the sampling frame axis-aligned by rotating the part.
                child.rot = Rotation::axis_angle(axis_vec((axis + 1) % 3, 1.0), M_PI / 2.0);
            }

            bool collide_here = params.collisions && placed_collision < 0 && part >= 1 &&
                                attempt < 12 && rng.uniform() < 0.5;
            double gap = collide_here ? -0.05 : kValidGap;

            const Primitive& pp = b.parts[parent];
            double child_reach;
            if (child.kind == PrimKind::Box)
                child_reach = child.half[axis];
            else if (child.kind == PrimKind::Cylinder)
                child_reach = child.half.z;
            else
                child_reach = child.radius;

            double fsurf = surface_coord(pp, axis, sign);
            child.center.set(axis, fsurf + sign * (gap + child_reach));

            int u = (axis + 1) % 3, v = (axis + 2) % 3;
            double pl_u = lateral_half(pp, u), pl_v = lateral_half(pp, v);
            double cl_u, cl_v;
            if (child.kind == PrimKind::Box) {
                cl_u = child.half[u];
                cl_v = child.half[v];
            } else if (child.kind == PrimKind::Cylinder) {
                cl_u = cl_v = child.half.x;
            } else {
                cl_u = cl_v = child.radius * 0.4;
            }
            double room_u = pl_u - cl_u - 0.02, room_v = pl_v - cl_v - 0.02;
            if (room_u < 0.0 || room_v < 0.0) continue;
            child.center.set(u, pp.center[u] + rng.uniform(-room_u, room_u));
            child.center.set(v, pp.center[v] + rng.uniform(-room_v, room_v));

            // Clearance against everything but the parent.
            Vec3 clo, chi;
            aabb_of(child, clo, chi);
            bool clash = false;
            for (size_t o = 0; o < b.parts.size(); ++o) {
                if (int(o) == parent) continue;
                Vec3 lo, hi;
                aabb_of(b.parts[o], lo, hi);
                if (aabb_overlap(clo, chi, lo, hi, kClearance)) {
                    clash = true;
                    break;
                }
            }
            if (clash) continue;

            int child_id = int(b.parts.size());
            b.parts.push_back(child);
            for (int f = 0; f < 6; ++f) b.face_used.push_back(0);
            b.mark_face(parent, face);
            // The child's facing "face" is occupied too.
            int child_face = axis * 2 + (sign > 0 ? 1 : 0);
            b.mark_face(child_id, child_face);

            ContactSpec spec;
            spec.parent = parent;
            spec.child = child_id;
            spec.axis = axis_vec(axis, sign);
            double patch = std::min(0.11, 0.8 * std::min(cl_u, cl_v));
            spec.radius = std::max(patch, 0.03);
            spec.gap = gap;
            spec.center = child.center;
            spec.center.set(axis, fsurf + sign * gap * 0.5);
            b.contacts.push_back(spec);
            if (collide_here) {
                b.collisions.emplace_back(parent, child_id);
                placed_collision = child_id;
            }
            attached = true;
        }
        // Placement failure leaves fewer parts; keep going.
    }

    // Decoys: small rotated duplicates hovering beside a contact, nearer to
    // the child surface than the valid gap.
    if (params.decoys) {
        for (const auto& spec : b.contacts) {
            if (spec.gap < 0.0) continue;
            if (int(b.parts.size()) >= 12) break;
            if (rng.uniform() >= 0.65) continue;
            int axis = 0;
            for (int a = 0; a < 3; ++a)
                if (std::abs(spec.axis[a]) > 0.5) axis = a;
            double sign = spec.axis[axis] > 0 ? 1.0 : -1.0;
            int u = (axis + 1) % 3;

            Primitive decoy;
            decoy.kind = PrimKind::Box;
            decoy.decoy = true;
            decoy.half = {kDecoyExtent * 0.5, kDecoyExtent * 0.5, kDecoyExtent * 0.5};
            // Tilt about the in-plane v axis so an edge, not a face, points at
            // the contact strip.
            decoy.rot = Rotation::axis_angle(axis_vec((axis + 2) % 3, 1.0), M_PI / 4.0);
            double reach = kDecoyExtent * 0.5 * std::sqrt(2.0);

            // Hover at the patch rim: the near edge sits kDecoyGap outside the
            // strip laterally and kDecoyGap above the parent face, which puts
            // it closer to the dense strip samples than the valid gap.
            double parent_surf = spec.center[axis] - sign * spec.gap * 0.5;
            decoy.center = spec.center;
            decoy.center.set(u, spec.center[u] + spec.radius + kDecoyGap + reach);
            decoy.center.set(axis, parent_surf + sign * (kDecoyGap + reach));

            Vec3 dlo, dhi;
            aabb_of(decoy, dlo, dhi);
            bool clash = false;
            for (size_t o = 0; o < b.parts.size(); ++o) {
                if (int(o) == spec.child || int(o) == spec.parent) continue;
                Vec3 lo, hi;
                aabb_of(b.parts[o], lo, hi);
                if (aabb_overlap(dlo, dhi, lo, hi, 0.02)) {
                    clash = true;
                    break;
                }
            }
            if (clash) continue;
            b.decoys.push_back(int(b.parts.size()));
            b.parts.push_back(decoy);
            for (int f = 0; f < 6; ++f) b.face_used.push_back(0);
        }
    }

    // Sample all surfaces.
    std::vector<Vec3> points, normals;
    std::vector<int> component;
    for (size_t k = 0; k < b.parts.size(); ++k) {
        Rng prng(derive_seed(params.seed, 0x0b0d7 + k));
        std::vector<Sample> samples;
        int count = b.parts[k].decoy ? kDecoySamples : params.density;
        sample_primitive(b.parts[k], count, prng, samples);
        for (const auto& s : samples) {
            points.push_back(s.p);
            normals.push_back(s.n);
            component.push_back(int(k));
        }
    }
    // Dense strips on both sides of every contact.
    for (size_t e = 0; e < b.contacts.size(); ++e) {
        const auto& spec = b.contacts[e];
        if (spec.gap < 0.0) continue;  // planted collisions get no strip
        int axis = 0;
        for (int a = 0; a < 3; ++a)
            if (std::abs(spec.axis[a]) > 0.5) axis = a;
        double sign = spec.axis[axis] > 0 ? 1.0 : -1.0;
        Rng srng(derive_seed(params.seed, 0x57817 + e));
        for (int side = 0; side < 2; ++side) {
            int part = side == 0 ? spec.parent : spec.child;
            double out_sign = side == 0 ? sign : -sign;
            Vec3 lateral = spec.center;
            lateral.set(axis, surface_coord(b.parts[part], axis, out_sign));
            std::vector<Sample> strip;
            sample_contact_disk(b.parts[part], lateral, axis, out_sign, spec.radius,
                                kStripSamples, srng, strip);
            for (const auto& s : strip) {
                points.push_back(s.p);
                normals.push_back(s.n);
                component.push_back(part);
            }
        }
    }

    // Normalize to [-1,1]^3 and carry the ground truth into the same frame.
    Vec3 lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        lo.z = std::min(lo.z, p.z);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
        hi.z = std::max(hi.z, p.z);
    }
    double span = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
    Vec3 center = (lo + hi) * 0.5;
    double scale = 2.0 / span;
    for (auto& p : points) p = (p - center) * scale;

    SynthObject obj;
    obj.surface.points = std::move(points);
    obj.surface.normals = std::move(normals);
    obj.surface.component_of = std::move(component);
    obj.surface.extent = 2.0;
    obj.gt.contacts = b.contacts;
    for (auto& spec : obj.gt.contacts) {
        spec.center = (spec.center - center) * scale;
        spec.radius *= scale;
        spec.gap *= scale;
    }
    obj.gt.decoy_components = b.decoys;
    obj.gt.collision_pairs = b.collisions;
    std::ostringstream id;
    id << "synth-" << params.seed;
    obj.id = id.str();
    return obj;
}

std::vector<SynthObject> generate_corpus(size_t n, uint64_t seed, int density, bool decoys,
                                         bool collisions) {
    if (n < 1) throw ConfigError("corpus size must be >= 1");
    std::vector<SynthObject> corpus(n);
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < long(n); ++i) {
        SynthParams p;
        p.parts = 2 + int(size_t(i) % 11);
        p.density = density;
        p.decoys = decoys;
        p.collisions = collisions;
        p.seed = derive_seed(seed, uint64_t(i));
        corpus[size_t(i)] = generate(p);
        corpus[size_t(i)].id = "synth-" + std::to_string(i);
    }
    return corpus;
}

namespace {

void emit_box(std::ostringstream& os, const Primitive& b, int& base) {
    Vec3 corners[8];
    int idx = 0;
    for (int sx = -1; sx <= 1; sx += 2)
        for (int sy = -1; sy <= 1; sy += 2)
            for (int sz = -1; sz <= 1; sz += 2)
                corners[idx++] =
                    b.center + b.rot.apply(Vec3{sx * b.half.x, sy * b.half.y, sz * b.half.z});
    for (const auto& c : corners) os << "v " << c.x << " " << c.y << " " << c.z << "\n";
    static const int quads[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                                    {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
    for (const auto& q : quads) {
        os << "f " << base + q[0] << " " << base + q[1] << " " << base + q[2] << "\n";
        os << "f " << base + q[0] << " " << base + q[2] << " " << base + q[3] << "\n";
    }
    base += 8;
}

void emit_cylinder(std::ostringstream& os, const Primitive& c, int& base) {
    const int seg = 16;
    for (int ring = 0; ring < 2; ++ring) {
        double z = ring == 0 ? -c.half.z : c.half.z;
        for (int s = 0; s < seg; ++s) {
            double t = 2.0 * M_PI * s / seg;
            Vec3 p = c.center + c.rot.apply(Vec3{c.half.x * std::cos(t), c.half.x * std::sin(t), z});
            os << "v " << p.x << " " << p.y << " " << p.z << "\n";
        }
    }
    Vec3 c0 = c.center + c.rot.apply(Vec3{0, 0, -c.half.z});
    Vec3 c1 = c.center + c.rot.apply(Vec3{0, 0, c.half.z});
    os << "v " << c0.x << " " << c0.y << " " << c0.z << "\n";
    os << "v " << c1.x << " " << c1.y << " " << c1.z << "\n";
    int lo = base, hi = base + seg, b0 = base + 2 * seg, b1 = b0 + 1;
    for (int s = 0; s < seg; ++s) {
        int sn = (s + 1) % seg;
        os << "f " << lo + s << " " << lo + sn << " " << hi + sn << "\n";
        os << "f " << lo + s << " " << hi + sn << " " << hi + s << "\n";
        os << "f " << b0 << " " << lo + sn << " " << lo + s << "\n";
        os << "f " << b1 << " " << hi + s << " " << hi + sn << "\n";
    }
    base += 2 * seg + 2;
}

void emit_sphere(std::ostringstream& os, const Primitive& sp, int& base) {
    const int nu = 12, nv = 8;
    std::vector<int> grid((nv + 1) * nu);
    int count = 0;
    for (int r = 0; r <= nv; ++r) {
        double phi = M_PI * r / nv;
        for (int s = 0; s < nu; ++s) {
            double t = 2.0 * M_PI * s / nu;
            Vec3 p = sp.center + Vec3{std::sin(phi) * std::cos(t), std::sin(phi) * std::sin(t),
                                      std::cos(phi)} *
                                     sp.radius;
            os << "v " << p.x << " " << p.y << " " << p.z << "\n";
            grid[r * nu + s] = base + count++;
        }
    }
    for (int r = 0; r < nv; ++r) {
        for (int s = 0; s < nu; ++s) {
            int sn = (s + 1) % nu;
            int a = grid[r * nu + s], bb = grid[r * nu + sn];
            int c = grid[(r + 1) * nu + s], d = grid[(r + 1) * nu + sn];
            if (r > 0) os << "f " << a << " " << bb << " " << d << "\n";
            if (r < nv - 1) os << "f " << a << " " << d << " " << c << "\n";
        }
    }
    base += count;
}

}  // namespace

std::string to_obj(const SynthParams& params) {
    if (params.parts < 2 || params.parts > 12)
        throw ConfigError("synth parts must lie in [2,12]");
    // Stacked tessellated assembly; used by the OBJ reader path, so the
    // layout does not need to match generate()'s sampled geometry.
    std::ostringstream os;
    os << "# synth assembly\n";
    int base = 1;
    Rng r2(derive_seed(params.seed, 0x0b1ULL));
    Primitive root;
    root.kind = PrimKind::Box;
    root.half = {r2.uniform(0.3, 0.45), r2.uniform(0.3, 0.45), r2.uniform(0.07, 0.13)};
    emit_box(os, root, base);
    double top = root.half.z;
    int n = std::max(1, params.parts - 1);
    for (int k = 0; k < n; ++k) {
        double roll = r2.uniform();
        Primitive part;
        if (roll < 0.5) {
            part.kind = PrimKind::Box;
            part.half = {r2.uniform(0.08, 0.15), r2.uniform(0.08, 0.15), r2.uniform(0.08, 0.15)};
            part.center = {r2.uniform(-0.2, 0.2), r2.uniform(-0.2, 0.2), top + 0.02 + part.half.z};
            emit_box(os, part, base);
        } else if (roll < 0.8) {
            part.kind = PrimKind::Cylinder;
            part.half = {r2.uniform(0.07, 0.12), 0.0, r2.uniform(0.08, 0.16)};
            part.center = {r2.uniform(-0.2, 0.2), r2.uniform(-0.2, 0.2), top + 0.02 + part.half.z};
            emit_cylinder(os, part, base);
        } else {
            part.kind = PrimKind::Sphere;
            part.radius = r2.uniform(0.09, 0.14);
            part.center = {r2.uniform(-0.2, 0.2), r2.uniform(-0.2, 0.2), top + 0.02 + part.radius};
            emit_sphere(os, part, base);
        }
        top = part.center.z + (part.kind == PrimKind::Sphere ? part.radius : part.half.z);
    }
    return os.str();
}

}  // namespace c2lt
