#ifndef PCS_IO_HPP
#define PCS_IO_HPP

// Point cloud and triangle mesh files.
//
//   XYZ  one "x y z [saliency]" line per point; blank lines and '#' comments skipped.
//   OBJ  "v" and "f" records only; 1-based (or negative relative) indices,
//        polygons are fan-triangulated, "a/b/c" corner syntax accepted.
//   PLY  ascii or binary_little_endian. Vertex element with float/double
//        x, y, z and optional saliency; face element with a list property
//        vertex_indices (integer count and index types). Anything else is
//        rejected with "unsupported-property".
//
// Writers emit doubles in shortest round-trip form (text) or IEEE-754
// little-endian (binary), so read(write(x)) == x exactly.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/mesh.hpp"
#include "pcs/rng.hpp"

namespace pcs {

static_assert(std::endian::native == std::endian::little, "binary I/O assumes a little-endian host");

enum class PlyEncoding { ascii, binary_little_endian };

namespace io_detail {

[[noreturn]] inline void malformed(std::size_t line, const std::string& what) {
    fail(ErrorKind::data, "malformed", "line " + std::to_string(line) + ": " + what);
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view tok) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<long long> parse_int(std::string_view tok) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
    return v;
}

inline void append_double(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

/// Splits into lines, tracking 1-based line numbers.
class LineReader {
public:
    explicit LineReader(std::string_view text, std::size_t pos = 0) : text_(text), pos_(pos) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        const std::size_t end = text_.find('\n', pos_);
        const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
        line = text_.substr(pos_, stop - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end == std::string_view::npos ? text_.size() : end + 1;
        ++number_;
        return true;
    }

    std::size_t line_number() const { return number_; }
    std::size_t position() const { return pos_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t number_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "io-error", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::data, "io-error", "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::data, "io-error", "write failed for " + path.string());
}

inline std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

/// Fan-triangulates polygons, checks indices and drops zero-area triangles.
inline TriangleMesh build_mesh(std::vector<Point3> vertices, const std::vector<std::vector<long long>>& polygons,
                               std::size_t* dropped) {
    TriangleMesh mesh;
    mesh.vertices = std::move(vertices);
    std::size_t skipped = 0;
    for (std::size_t f = 0; f < polygons.size(); ++f) {
        const auto& poly = polygons[f];
        for (const long long v : poly)
            if (v < 0 || static_cast<unsigned long long>(v) >= mesh.vertices.size())
                fail(ErrorKind::data, "index-out-of-range",
                     "face " + std::to_string(f) + " references vertex " + std::to_string(v));
        for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
            const Triangle tri{static_cast<std::uint32_t>(poly[0]), static_cast<std::uint32_t>(poly[i]),
                               static_cast<std::uint32_t>(poly[i + 1])};
            if (is_degenerate_triangle(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]])) {
                ++skipped;
                continue;
            }
            mesh.triangles.push_back(tri);
        }
    }
    if (dropped) *dropped = skipped;
    validate_mesh(mesh);
    return mesh;
}

// ---- PLY ----

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

inline std::optional<PlyType> ply_type(std::string_view name) {
    if (name == "char" || name == "int8") return PlyType::i8;
    if (name == "uchar" || name == "uint8") return PlyType::u8;
    if (name == "short" || name == "int16") return PlyType::i16;
    if (name == "ushort" || name == "uint16") return PlyType::u16;
    if (name == "int" || name == "int32") return PlyType::i32;
    if (name == "uint" || name == "uint32") return PlyType::u32;
    if (name == "float" || name == "float32") return PlyType::f32;
    if (name == "double" || name == "float64") return PlyType::f64;
    return std::nullopt;
}

inline std::size_t ply_size(PlyType t) {
    switch (t) {
    case PlyType::i8: case PlyType::u8: return 1;
    case PlyType::i16: case PlyType::u16: return 2;
    case PlyType::i32: case PlyType::u32: case PlyType::f32: return 4;
    case PlyType::f64: return 8;
    }
    return 0;
}

inline bool ply_is_integer(PlyType t) { return t != PlyType::f32 && t != PlyType::f64; }

template <class T>
T load_le(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

inline double ply_load(PlyType t, const char* p) {
    switch (t) {
    case PlyType::i8: return load_le<std::int8_t>(p);
    case PlyType::u8: return load_le<std::uint8_t>(p);
    case PlyType::i16: return load_le<std::int16_t>(p);
    case PlyType::u16: return load_le<std::uint16_t>(p);
    case PlyType::i32: return load_le<std::int32_t>(p);
    case PlyType::u32: return load_le<std::uint32_t>(p);
    case PlyType::f32: return load_le<float>(p);
    case PlyType::f64: return load_le<double>(p);
    }
    return 0.0;
}

struct PlyData {
    std::vector<Point3> vertices;
    std::optional<std::vector<double>> saliency;
    std::vector<std::vector<long long>> faces;
};

inline PlyData parse_ply(std::string_view bytes) {
    enum class Field { x, y, z, saliency };
    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::pair<Field, PlyType>> scalars; // vertex
        PlyType list_count = PlyType::u8, list_item = PlyType::i32; // face
        bool has_list = false;
    };

    LineReader lines(bytes);
    std::string_view line;
    if (!lines.next(line) || line != "ply") malformed(1, "missing 'ply' magic");
    bool binary = false, have_format = false, ended = false;
    std::vector<Element> elements;
    while (lines.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "comment" || tok[0] == "obj_info") continue;
        if (tok[0] == "end_header") {
            ended = true;
            break;
        }
        if (tok[0] == "format") {
            if (tok.size() != 3) malformed(lines.line_number(), "bad format line");
            if (tok[1] == "ascii") binary = false;
            else if (tok[1] == "binary_little_endian") binary = true;
            else fail(ErrorKind::data, "unsupported-format", "PLY format '" + std::string(tok[1]) + "'");
            have_format = true;
        } else if (tok[0] == "element") {
            if (tok.size() != 3) malformed(lines.line_number(), "bad element line");
            const auto count = parse_int(tok[2]);
            if (!count || *count < 0) malformed(lines.line_number(), "bad element count");
            if (tok[1] != "vertex" && tok[1] != "face")
                fail(ErrorKind::data, "unsupported-property", "PLY element '" + std::string(tok[1]) + "'");
            for (const auto& e : elements)
                if (e.name == tok[1]) malformed(lines.line_number(), "duplicate element");
            elements.push_back({std::string(tok[1]), static_cast<std::size_t>(*count), {}, {}, {}, false});
        } else if (tok[0] == "property") {
            if (elements.empty()) malformed(lines.line_number(), "property before element");
            Element& el = elements.back();
            if (el.name == "vertex") {
                if (tok.size() != 3) fail(ErrorKind::data, "unsupported-property", "vertex property '" + std::string(line) + "'");
                const auto type = ply_type(tok[1]);
                if (!type) malformed(lines.line_number(), "unknown type");
                Field field;
                if (tok[2] == "x") field = Field::x;
                else if (tok[2] == "y") field = Field::y;
                else if (tok[2] == "z") field = Field::z;
                else if (tok[2] == "saliency") field = Field::saliency;
                else fail(ErrorKind::data, "unsupported-property", "vertex property '" + std::string(tok[2]) + "'");
                if (ply_is_integer(*type))
                    fail(ErrorKind::data, "unsupported-property", "vertex property '" + std::string(tok[2]) + "' must be float or double");
                for (const auto& [f, t] : el.scalars)
                    if (f == field) malformed(lines.line_number(), "duplicate property");
                el.scalars.emplace_back(field, *type);
            } else {
                if (tok.size() != 5 || tok[1] != "list" || (tok[4] != "vertex_indices" && tok[4] != "vertex_index") ||
                    el.has_list)
                    fail(ErrorKind::data, "unsupported-property", "face property '" + std::string(line) + "'");
                const auto ct = ply_type(tok[2]);
                const auto it = ply_type(tok[3]);
                if (!ct || !it || !ply_is_integer(*ct) || !ply_is_integer(*it))
                    fail(ErrorKind::data, "unsupported-property", "face list types must be integers");
                el.list_count = *ct;
                el.list_item = *it;
                el.has_list = true;
            }
        } else {
            malformed(lines.line_number(), "unexpected header keyword '" + std::string(tok[0]) + "'");
        }
    }
    if (!ended) malformed(lines.line_number(), "missing end_header");
    if (!have_format) malformed(lines.line_number(), "missing format line");

    PlyData data;
    bool have_vertices = false;
    for (const auto& el : elements) {
        if (el.name == "vertex") {
            bool hx = false, hy = false, hz = false, hs = false;
            for (const auto& [f, t] : el.scalars) {
                hx |= f == Field::x; hy |= f == Field::y; hz |= f == Field::z; hs |= f == Field::saliency;
            }
            if (!hx || !hy || !hz) malformed(lines.line_number(), "vertex element lacks x, y or z");
            have_vertices = true;
            if (hs) data.saliency.emplace();
        } else if (!el.has_list) {
            malformed(lines.line_number(), "face element without vertex_indices");
        }
    }
    if (!have_vertices) malformed(lines.line_number(), "no vertex element");

    const std::size_t body = lines.position();
    if (binary) {
        std::size_t pos = body;
        auto need = [&](std::size_t n) {
            if (n > bytes.size() - pos) fail(ErrorKind::data, "truncated", "binary PLY body ends early");
        };
        for (const auto& el : elements) {
            if (el.name == "vertex") {
                std::size_t stride = 0;
                for (const auto& [f, t] : el.scalars) stride += ply_size(t);
                if (el.count > (bytes.size() - pos) / stride) fail(ErrorKind::data, "truncated", "binary PLY body ends early");
                data.vertices.reserve(el.count);
                if (data.saliency) data.saliency->reserve(el.count);
                for (std::size_t i = 0; i < el.count; ++i) {
                    Point3 p;
                    double s = 0.0;
                    for (const auto& [f, t] : el.scalars) {
                        const double v = ply_load(t, bytes.data() + pos);
                        pos += ply_size(t);
                        switch (f) {
                        case Field::x: p.x = v; break;
                        case Field::y: p.y = v; break;
                        case Field::z: p.z = v; break;
                        case Field::saliency: s = v; break;
                        }
                    }
                    data.vertices.push_back(p);
                    if (data.saliency) data.saliency->push_back(s);
                }
            } else {
                if (el.count > bytes.size() - pos) fail(ErrorKind::data, "truncated", "binary PLY body ends early");
                data.faces.reserve(el.count);
                for (std::size_t i = 0; i < el.count; ++i) {
                    need(ply_size(el.list_count));
                    const double cnt = ply_load(el.list_count, bytes.data() + pos);
                    pos += ply_size(el.list_count);
                    if (cnt < 3) fail(ErrorKind::data, "malformed", "face " + std::to_string(i) + " has fewer than 3 corners");
                    const auto n = static_cast<std::size_t>(cnt);
                    if (n > (bytes.size() - pos) / ply_size(el.list_item))
                        fail(ErrorKind::data, "truncated", "binary PLY body ends early");
                    std::vector<long long> poly(n);
                    for (auto& v : poly) {
                        v = static_cast<long long>(ply_load(el.list_item, bytes.data() + pos));
                        pos += ply_size(el.list_item);
                    }
                    data.faces.push_back(std::move(poly));
                }
            }
        }
    } else {
        for (const auto& el : elements) {
            if (el.name == "vertex") {
                data.vertices.reserve(std::min(el.count, bytes.size()));
                for (std::size_t i = 0; i < el.count; ++i) {
                    if (!lines.next(line)) fail(ErrorKind::data, "truncated", "ASCII PLY ends before all vertices");
                    const auto tok = split_ws(line);
                    if (tok.size() != el.scalars.size())
                        malformed(lines.line_number(), "expected " + std::to_string(el.scalars.size()) + " values");
                    Point3 p;
                    double s = 0.0;
                    for (std::size_t k = 0; k < tok.size(); ++k) {
                        const auto v = parse_double(tok[k]);
                        if (!v) malformed(lines.line_number(), "bad number '" + std::string(tok[k]) + "'");
                        switch (el.scalars[k].first) {
                        case Field::x: p.x = *v; break;
                        case Field::y: p.y = *v; break;
                        case Field::z: p.z = *v; break;
                        case Field::saliency: s = *v; break;
                        }
                    }
                    data.vertices.push_back(p);
                    if (data.saliency) data.saliency->push_back(s);
                }
            } else {
                data.faces.reserve(std::min(el.count, bytes.size()));
                for (std::size_t i = 0; i < el.count; ++i) {
                    if (!lines.next(line)) fail(ErrorKind::data, "truncated", "ASCII PLY ends before all faces");
                    const auto tok = split_ws(line);
                    if (tok.empty()) malformed(lines.line_number(), "empty face line");
                    const auto cnt = parse_int(tok[0]);
                    if (!cnt || *cnt < 3 || static_cast<std::size_t>(*cnt) + 1 != tok.size())
                        malformed(lines.line_number(), "bad face corner count");
                    std::vector<long long> poly;
                    poly.reserve(tok.size() - 1);
                    for (std::size_t k = 1; k < tok.size(); ++k) {
                        const auto v = parse_int(tok[k]);
                        if (!v) malformed(lines.line_number(), "bad index '" + std::string(tok[k]) + "'");
                        poly.push_back(*v);
                    }
                    data.faces.push_back(std::move(poly));
                }
            }
        }
    }
    for (const auto& p : data.vertices)
        if (!is_finite(p)) fail(ErrorKind::data, "non-finite", "PLY vertex is not finite");
    return data;
}

inline std::string ply_header(PlyEncoding enc, std::size_t vertices, bool saliency, std::optional<std::size_t> faces) {
    std::string h = "ply\nformat ";
    h += enc == PlyEncoding::ascii ? "ascii" : "binary_little_endian";
    h += " 1.0\nelement vertex " + std::to_string(vertices) + "\nproperty double x\nproperty double y\nproperty double z\n";
    if (saliency) h += "property double saliency\n";
    if (faces) h += "element face " + std::to_string(*faces) + "\nproperty list uchar int vertex_indices\n";
    h += "end_header\n";
    return h;
}

template <class T>
void store_le(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

} // namespace io_detail

// ---------------------------------------------------------------- parsing

inline PointCloud parse_xyz(std::string_view text) {
    using namespace io_detail;
    LineReader lines(text);
    std::string_view line;
    std::vector<Point3> pts;
    std::vector<double> sal;
    std::size_t columns = 0;
    while (lines.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (columns == 0) {
            if (tok.size() != 3 && tok.size() != 4) malformed(lines.line_number(), "expected 3 or 4 columns");
            columns = tok.size();
        } else if (tok.size() != columns) {
            fail(ErrorKind::data, "ragged-columns",
                 "line " + std::to_string(lines.line_number()) + ": expected " + std::to_string(columns) + " columns, got " +
                     std::to_string(tok.size()));
        }
        double v[4] = {0, 0, 0, 0};
        for (std::size_t k = 0; k < tok.size(); ++k) {
            const auto d = parse_double(tok[k]);
            if (!d) malformed(lines.line_number(), "bad number '" + std::string(tok[k]) + "'");
            v[k] = *d;
        }
        pts.push_back({v[0], v[1], v[2]});
        if (columns == 4) {
            if (v[3] < 0.0) malformed(lines.line_number(), "negative saliency");
            sal.push_back(v[3]);
        }
    }
    if (pts.empty()) fail(ErrorKind::data, "empty-cloud", "no points in XYZ data");
    if (columns == 4) return PointCloud(std::move(pts), std::move(sal));
    return PointCloud(std::move(pts));
}

inline TriangleMesh parse_obj(std::string_view text, std::size_t* dropped = nullptr) {
    using namespace io_detail;
    LineReader lines(text);
    std::string_view line;
    std::vector<Point3> verts;
    std::vector<std::vector<long long>> polys;
    while (lines.next(line)) {
        const auto tok = split_ws(line);
        if (tok.empty() || tok[0].front() == '#') continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) malformed(lines.line_number(), "vertex needs 3 coordinates");
            double c[3];
            for (int k = 0; k < 3; ++k) {
                const auto d = parse_double(tok[static_cast<std::size_t>(k) + 1]);
                if (!d) malformed(lines.line_number(), "bad coordinate '" + std::string(tok[static_cast<std::size_t>(k) + 1]) + "'");
                c[k] = *d;
            }
            verts.push_back({c[0], c[1], c[2]});
        } else if (tok[0] == "f") {
            if (tok.size() < 4) malformed(lines.line_number(), "face needs at least 3 corners");
            std::vector<long long> poly;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view corner = tok[k].substr(0, tok[k].find('/'));
                const auto v = parse_int(corner);
                if (!v || *v == 0) malformed(lines.line_number(), "bad face index '" + std::string(tok[k]) + "'");
                const long long idx = *v > 0 ? *v - 1 : static_cast<long long>(verts.size()) + *v;
                if (idx < 0) malformed(lines.line_number(), "relative index before first vertex");
                poly.push_back(idx);
            }
            polys.push_back(std::move(poly));
        }
        // vn, vt, o, g, s, usemtl, mtllib ... are ignored
    }
    for (const auto& p : verts)
        if (!is_finite(p)) fail(ErrorKind::data, "non-finite", "OBJ vertex is not finite");
    return build_mesh(std::move(verts), polys, dropped);
}

inline TriangleMesh parse_ply_mesh(std::string_view bytes, std::size_t* dropped = nullptr) {
    auto data = io_detail::parse_ply(bytes);
    return io_detail::build_mesh(std::move(data.vertices), data.faces, dropped);
}

inline PointCloud parse_ply_cloud(std::string_view bytes) {
    auto data = io_detail::parse_ply(bytes);
    if (data.vertices.empty()) fail(ErrorKind::data, "empty-cloud", "PLY has no vertices");
    return PointCloud(std::move(data.vertices), std::move(data.saliency));
}

// ---------------------------------------------------------------- formatting

inline std::string format_xyz(const PointCloud& cloud) {
    std::string out;
    out.reserve(cloud.size() * 64);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point3& p = cloud[i];
        io_detail::append_double(out, p.x);
        out += ' ';
        io_detail::append_double(out, p.y);
        out += ' ';
        io_detail::append_double(out, p.z);
        if (cloud.has_saliency()) {
            out += ' ';
            io_detail::append_double(out, (*cloud.saliency())[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string format_ply(const PointCloud& cloud, PlyEncoding enc, const std::vector<Triangle>* faces = nullptr) {
    using namespace io_detail;
    const bool sal = cloud.has_saliency();
    std::string out = ply_header(enc, cloud.size(), sal, faces ? std::optional(faces->size()) : std::nullopt);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point3& p = cloud[i];
        const double vals[4] = {p.x, p.y, p.z, sal ? (*cloud.saliency())[i] : 0.0};
        const std::size_t n = sal ? 4 : 3;
        for (std::size_t k = 0; k < n; ++k) {
            if (enc == PlyEncoding::ascii) {
                if (k) out += ' ';
                append_double(out, vals[k]);
            } else {
                store_le(out, vals[k]);
            }
        }
        if (enc == PlyEncoding::ascii) out += '\n';
    }
    if (faces) {
        for (const auto& t : *faces) {
            if (enc == PlyEncoding::ascii) {
                out += "3 " + std::to_string(t[0]) + ' ' + std::to_string(t[1]) + ' ' + std::to_string(t[2]) + '\n';
            } else {
                store_le<std::uint8_t>(out, 3);
                for (const auto v : t) store_le<std::int32_t>(out, static_cast<std::int32_t>(v));
            }
        }
    }
    return out;
}

inline std::string format_obj(const TriangleMesh& mesh) {
    std::string out;
    for (const auto& v : mesh.vertices) {
        out += "v ";
        io_detail::append_double(out, v.x);
        out += ' ';
        io_detail::append_double(out, v.y);
        out += ' ';
        io_detail::append_double(out, v.z);
        out += '\n';
    }
    for (const auto& t : mesh.triangles)
        out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' + std::to_string(t[2] + 1) + '\n';
    return out;
}

// ---------------------------------------------------------------- files

/// Reads .obj or .ply. `dropped` receives the number of zero-area triangles removed.
inline TriangleMesh read_mesh(const std::filesystem::path& path, std::size_t* dropped = nullptr) {
    const std::string ext = io_detail::lower_extension(path);
    if (ext != ".obj" && ext != ".ply") fail(ErrorKind::usage, "unsupported-format", "mesh extension '" + ext + "'");
    const std::string bytes = io_detail::read_file(path);
    return ext == ".obj" ? parse_obj(bytes, dropped) : parse_ply_mesh(bytes, dropped);
}

inline void write_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                       PlyEncoding enc = PlyEncoding::ascii) {
    validate_mesh(mesh);
    const std::string ext = io_detail::lower_extension(path);
    if (ext == ".obj") return io_detail::write_file(path, format_obj(mesh));
    if (ext == ".ply") return io_detail::write_file(path, format_ply(PointCloud(mesh.vertices), enc, &mesh.triangles));
    fail(ErrorKind::usage, "unsupported-format", "mesh extension '" + ext + "'");
}

/// Reads .xyz/.txt/.pts (XYZ text) or .ply.
inline PointCloud read_cloud(const std::filesystem::path& path) {
    const std::string ext = io_detail::lower_extension(path);
    if (ext != ".ply" && ext != ".xyz" && ext != ".txt" && ext != ".pts")
        fail(ErrorKind::usage, "unsupported-format", "cloud extension '" + ext + "'");
    const std::string bytes = io_detail::read_file(path);
    return ext == ".ply" ? parse_ply_cloud(bytes) : parse_xyz(bytes);
}

inline void write_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                        PlyEncoding enc = PlyEncoding::ascii) {
    const std::string ext = io_detail::lower_extension(path);
    if (ext == ".ply") return io_detail::write_file(path, format_ply(cloud, enc));
    if (ext == ".xyz" || ext == ".txt" || ext == ".pts") return io_detail::write_file(path, format_xyz(cloud));
    fail(ErrorKind::usage, "unsupported-format", "cloud extension '" + ext + "'");
}

// ---------------------------------------------------------------- sampling

/// Area-weighted uniform samples on the mesh surface. Triangles are chosen with
/// probability proportional to area; inside a triangle the barycentric weights
/// are (1 - sqrt(r1), sqrt(r1) * r2, sqrt(r1) * (1 - r2)).
inline PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t count, Rng& rng) {
    validate_mesh(mesh);
    if (count == 0) fail(ErrorKind::usage, "count-zero", "sample count must be positive");
    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto [a, b, c] = mesh.corners(t);
        total += triangle_area(a, b, c);
        cumulative[t] = total;
    }
    if (!(total > 0.0)) fail(ErrorKind::data, "degenerate-mesh", "mesh has zero surface area");

    std::vector<Point3> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const auto [a, b, c] = mesh.corners(static_cast<std::size_t>(it - cumulative.begin()));
        const double s1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const double u = 1.0 - s1, v = s1 * r2, w = s1 * (1.0 - r2);
        out.push_back(a * u + b * v + c * w);
    }
    return PointCloud(std::move(out));
}

} // namespace pcs

#endif
