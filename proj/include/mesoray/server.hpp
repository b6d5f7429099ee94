#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "mesoray/io.hpp"
#include "mesoray/renderer.hpp"
#include "mesoray/scene.hpp"

namespace mesoray {

/// Everything one frame needs besides the scene.
struct FrameRequest {
    Camera camera;
    RenderConfig config;
};

inline constexpr int kMaxFrameDimension = 4096;

namespace detail {

inline real query_number(const std::map<std::string, std::string>& q, const std::string& key, real fallback) {
    const auto it = q.find(key);
    if (it == q.end()) return fallback;
    const std::string& s = it->second;
    real v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw Error("parameter '" + key + "' is not a number");
    return v;
}

inline int query_dimension(const std::map<std::string, std::string>& q, const std::string& key, int fallback) {
    const real v = query_number(q, key, fallback);
    if (v != std::floor(v) || v < 1 || v > kMaxFrameDimension)
        throw Error("parameter '" + key + "' must be an integer in [1, " + std::to_string(kMaxFrameDimension) + "]");
    return static_cast<int>(v);
}

inline void check_camera(const Camera& c) {
    if (!(c.verticalFov > 0 && c.verticalFov < kPi)) throw Error("fov must lie in (0, 180) degrees");
    if (length(c.forward) == 0) throw Error("forward must be non-zero");
    if (length(cross(c.forward, c.up)) == 0) throw Error("up must not be parallel to forward");
}

inline std::string url_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') out += ' ';
        else if (s[i] == '%' && i + 2 < s.size()) {
            int v = 0;
            const auto r = std::from_chars(s.data() + i + 1, s.data() + i + 3, v, 16);
            if (r.ec != std::errc{} || r.ptr != s.data() + i + 3) throw Error("bad percent escape");
            out += static_cast<char>(v);
            i += 2;
        } else out += s[i];
    }
    return out;
}

}  // namespace detail

inline std::map<std::string, std::string> parse_query(std::string_view query) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    while (pos < query.size()) {
        std::size_t amp = query.find('&', pos);
        if (amp == std::string_view::npos) amp = query.size();
        const std::string_view pair = query.substr(pos, amp - pos);
        if (!pair.empty()) {
            const std::size_t eq = pair.find('=');
            if (eq == std::string_view::npos) out[detail::url_decode(pair)] = "";
            else out[detail::url_decode(pair.substr(0, eq))] = detail::url_decode(pair.substr(eq + 1));
        }
        pos = amp + 1;
    }
    return out;
}

/// `/frame` parameters: px,py,pz fx,fy,fz ux,uy,uz (camera), fov (degrees),
/// w, h, time, clip=nx,ny,nz,off, mode=shell|core|both. Anything omitted
/// comes from the scene defaults. Throws Error on malformed values.
inline FrameRequest parse_frame_query(const std::map<std::string, std::string>& q, const Scene& s) {
    static const std::set<std::string> known{"px", "py", "pz", "fx", "fy", "fz", "ux", "uy", "uz", "fov",
                                             "w", "h", "time", "clip", "mode", "jitter", "replas"};
    for (const auto& [k, v] : q)
        if (!known.contains(k)) throw Error("unknown parameter '" + k + "'");
    FrameRequest r{s.camera, s.render};
    Camera& c = r.camera;
    c.position = {detail::query_number(q, "px", c.position.x), detail::query_number(q, "py", c.position.y),
                  detail::query_number(q, "pz", c.position.z)};
    c.forward = {detail::query_number(q, "fx", c.forward.x), detail::query_number(q, "fy", c.forward.y),
                 detail::query_number(q, "fz", c.forward.z)};
    c.up = {detail::query_number(q, "ux", c.up.x), detail::query_number(q, "uy", c.up.y),
            detail::query_number(q, "uz", c.up.z)};
    c.verticalFov = detail::query_number(q, "fov", c.verticalFov * 180 / kPi) * kPi / 180;
    c.width = detail::query_dimension(q, "w", c.width);
    c.height = detail::query_dimension(q, "h", c.height);
    detail::check_camera(c);
    r.config.time = detail::query_number(q, "time", r.config.time);
    r.config.jitterAmplitude = detail::query_number(q, "jitter", r.config.jitterAmplitude);
    if (r.config.jitterAmplitude < 0) throw Error("jitter must be non-negative");
    if (const auto it = q.find("clip"); it != q.end()) {
        if (it->second.empty() || it->second == "off") {
            r.config.clipPlane.enabled = false;
        } else {
            std::vector<std::string> parts;
            std::size_t pos = 0;
            while (true) {
                const std::size_t comma = it->second.find(',', pos);
                parts.push_back(it->second.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (parts.size() != 4) throw Error("clip must be nx,ny,nz,offset");
            std::array<real, 4> v{};
            for (int i = 0; i < 4; ++i) v[i] = detail::query_number({{"clip", parts[i]}}, "clip", 0);
            r.config.clipPlane = {{v[0], v[1], v[2]}, v[3], true};
            if (length(r.config.clipPlane.normal) == 0) throw Error("clip normal must be non-zero");
        }
    }
    if (const auto it = q.find("mode"); it != q.end()) {
        try {
            r.config.mode = parse_render_mode(it->second);
        } catch (const SchemaError&) {
            throw Error("mode must be shell, core or both");
        }
    }
    if (const auto it = q.find("replas"); it != q.end()) {
        if (it->second != "0" && it->second != "1") throw Error("replas must be 0 or 1");
        r.config.useRepLas = it->second == "1";
    }
    return r;
}

/// `/stream` state message: {"seq": n, "camera": {...}, "time": t,
/// "clip": {"normal": [...], "offset": o, "enabled": b}, "mode": "..."}.
inline std::pair<std::uint64_t, FrameRequest> parse_stream_message(std::string_view text, const Scene& s) {
    const json doc = detail::parse_json(text, "stream message");
    const detail::Node root{doc, ""};
    FrameRequest r{s.camera, s.render};
    const std::uint64_t seq = root.has("seq") ? static_cast<std::uint64_t>(root.at("seq").integer()) : 0;
    if (root.has("camera")) {
        const detail::Node c = root.at("camera");
        r.camera.position = c.vec3_or("position", r.camera.position);
        r.camera.forward = c.vec3_or("forward", r.camera.forward);
        r.camera.up = c.vec3_or("up", r.camera.up);
        if (c.has("fovDegrees")) r.camera.verticalFov = c.at("fovDegrees").number() * kPi / 180;
        if (c.has("width")) r.camera.width = static_cast<int>(c.at("width").integer());
        if (c.has("height")) r.camera.height = static_cast<int>(c.at("height").integer());
    }
    if (r.camera.width < 1 || r.camera.height < 1 || r.camera.width > kMaxFrameDimension ||
        r.camera.height > kMaxFrameDimension)
        throw SchemaError("camera", "image size out of range");
    try {
        detail::check_camera(r.camera);
    } catch (const Error& e) {
        throw SchemaError("camera", e.what());
    }
    r.config.time = root.number_or("time", r.config.time);
    r.config.jitterAmplitude = root.number_or("jitterAmplitude", r.config.jitterAmplitude);
    if (root.has("clip")) {
        const detail::Node c = root.at("clip");
        r.config.clipPlane.enabled = c.boolean_or("enabled", true);
        if (r.config.clipPlane.enabled) {
            r.config.clipPlane.normal = c.at("normal").vec3();
            r.config.clipPlane.offset = c.at("offset").number();
        }
    }
    if (root.has("mode")) r.config.mode = detail::mode_of(root.at("mode"));
    return {seq, r};
}

/// Single-slot mailbox: a newer state replaces an unconsumed older one, so a
/// busy renderer only ever sees the most recent request.
template <class T>
class LatestMailbox {
public:
    void post(T value) {
        {
            std::lock_guard lock(mutex_);
            if (slot_) ++dropped_;
            slot_ = std::move(value);
        }
        cv_.notify_one();
    }
    /// Blocks until a value is available or the mailbox is closed.
    std::optional<T> take() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return slot_.has_value() || closed_; });
        if (!slot_) return std::nullopt;
        std::optional<T> out = std::move(slot_);
        slot_.reset();
        return out;
    }
    void close() {
        {
            std::lock_guard lock(mutex_);
            closed_ = true;
        }
        cv_.notify_all();
    }
    long long dropped() const {
        std::lock_guard lock(mutex_);
        return dropped_;
    }

private:
    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<T> slot_;
    bool closed_ = false;
    long long dropped_ = 0;
};

/// HTTP + WebSocket frame endpoint on one port.
///   GET /frame?...      -> image/x-portable-pixmap
///   GET /scene/info     -> scene metadata
///   GET /stats          -> render and coalescing counters
///   GET /stream         -> WebSocket; text state messages in, binary frames
///                          out (8-byte little-endian seq, then the pixmap)
///   GET /...            -> static viewer assets from `staticDir`, if set
class FrameServer {
public:
    FrameServer(const Scene& scene, unsigned short port, std::filesystem::path staticDir = {})
        : scene_(scene), staticDir_(std::move(staticDir)), acceptor_(io_) {
        namespace net = boost::asio;
        const net::ip::tcp::endpoint ep(net::ip::make_address("127.0.0.1"), port);
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen();
        port_ = acceptor_.local_endpoint().port();
    }
    ~FrameServer() { stop(); }
    FrameServer(const FrameServer&) = delete;
    FrameServer& operator=(const FrameServer&) = delete;

    unsigned short port() const { return port_; }
    long long render_count() const { return renders_.load(); }
    long long stream_messages() const { return streamMessages_.load(); }

    /// Called before every stream render (tests use it to hold the renderer
    /// busy while more messages arrive).
    void set_before_stream_render(std::function<void(std::uint64_t seq)> hook) { beforeStreamRender_ = std::move(hook); }

    void start() {
        acceptThread_ = std::thread([this] { accept_loop(); });
    }
    /// Blocks serving until stop() is called from another thread.
    void run() {
        start();
        std::unique_lock lock(stateMutex_);
        stopCv_.wait(lock, [&] { return stopping_; });
    }

    void stop() {
        {
            std::lock_guard lock(stateMutex_);
            if (stopping_ && !acceptThread_.joinable()) return;
            stopping_ = true;
            for (auto& conn : connections_) conn->shutdown();
        }
        stopCv_.notify_all();
        if (acceptThread_.joinable()) {
            // Closing the acceptor does not interrupt a blocking accept(), so
            // hand the loop one throwaway connection; it then sees stopping_.
            boost::asio::io_context io;
            tcp::socket wake(io);
            boost::system::error_code ec;
            wake.connect({boost::asio::ip::make_address("127.0.0.1"), port_}, ec);
            acceptThread_.join();
        }
        {
            std::lock_guard lock(stateMutex_);
            boost::system::error_code ec;
            acceptor_.close(ec);
        }
        std::list<std::shared_ptr<Connection>> conns;
        {
            std::lock_guard lock(stateMutex_);
            conns.swap(connections_);
        }
        for (auto& conn : conns)
            if (conn->thread.joinable()) conn->thread.join();
    }

private:
    using tcp = boost::asio::ip::tcp;
    using Request = boost::beast::http::request<boost::beast::http::string_body>;
    using Response = boost::beast::http::response<boost::beast::http::string_body>;

    struct Connection {
        tcp::socket socket;
        std::thread thread;
        std::mutex mutex;
        std::function<void()> onShutdown;
        explicit Connection(boost::asio::io_context& io) : socket(io) {}
        void shutdown() {
            std::lock_guard lock(mutex);
            boost::system::error_code ec;
            socket.shutdown(tcp::socket::shutdown_both, ec);
            if (onShutdown) onShutdown();
        }
    };

    void accept_loop() {
        while (true) {
            auto conn = std::make_shared<Connection>(io_);
            boost::system::error_code ec;
            acceptor_.accept(conn->socket, ec);
            std::lock_guard lock(stateMutex_);
            if (stopping_) return;
            if (ec) continue;
            connections_.push_back(conn);
            conn->thread = std::thread([this, conn] { serve(*conn); });
        }
    }

    Response text_response(const Request& req, boost::beast::http::status status, std::string body,
                           const std::string& type = "text/plain") const {
        Response res{status, req.version()};
        res.set(boost::beast::http::field::content_type, type);
        res.set(boost::beast::http::field::access_control_allow_origin, "*");
        res.keep_alive(req.keep_alive());
        res.body() = std::move(body);
        res.prepare_payload();
        return res;
    }

    std::string render_ppm(const FrameRequest& r) {
        std::lock_guard lock(renderMutex_);
        const Framebuffer fb = render_frame(scene_, r.camera, r.config);
        ++renders_;
        return encode_ppm(to_image(fb));
    }

    Response handle(const Request& req) {
        namespace http = boost::beast::http;
        if (req.method() != http::verb::get) return text_response(req, http::status::method_not_allowed, "GET only\n");
        const std::string target(req.target());
        const std::size_t qmark = target.find('?');
        const std::string path = target.substr(0, qmark);
        const std::string query = qmark == std::string::npos ? "" : target.substr(qmark + 1);
        if (path == "/frame") {
            FrameRequest fr;
            try {
                fr = parse_frame_query(parse_query(query), scene_);
            } catch (const Error& e) {
                return text_response(req, http::status::bad_request, std::string(e.what()) + "\n");
            }
            try {
                return text_response(req, http::status::ok, render_ppm(fr), "image/x-portable-pixmap");
            } catch (const std::exception& e) {
                return text_response(req, http::status::internal_server_error, std::string(e.what()) + "\n");
            }
        }
        if (path == "/scene/info") return text_response(req, http::status::ok, scene_info(scene_).dump(), "application/json");
        if (path == "/stats") {
            const json j{{"renders", renders_.load()},
                         {"streamMessages", streamMessages_.load()},
                         {"virtualAtomCount", virtual_atom_count(scene_)}};
            return text_response(req, http::status::ok, j.dump(), "application/json");
        }
        if (!staticDir_.empty()) {
            std::string rel = path == "/" ? "index.html" : path.substr(1);
            if (rel.find("..") == std::string::npos) {
                const std::filesystem::path file = staticDir_ / rel;
                if (std::filesystem::is_regular_file(file)) {
                    const std::string ext = file.extension().string();
                    const std::string type = ext == ".html" ? "text/html"
                                             : ext == ".js" ? "text/javascript"
                                             : ext == ".css" ? "text/css"
                                                             : "application/octet-stream";
                    return text_response(req, http::status::ok, read_text_file(file), type);
                }
            }
        }
        return text_response(req, http::status::not_found, "not found\n");
    }

    void serve(Connection& conn) {
        namespace http = boost::beast::http;
        boost::beast::flat_buffer buffer;
        boost::system::error_code ec;
        while (true) {
            Request req;
            http::read(conn.socket, buffer, req, ec);
            if (ec) break;
            if (boost::beast::websocket::is_upgrade(req)) {
                if (req.target() == "/stream") stream(conn, std::move(req));
                break;
            }
            Response res = handle(req);
            http::write(conn.socket, res, ec);
            if (ec || !res.keep_alive()) break;
        }
        boost::system::error_code ignored;
        conn.socket.shutdown(tcp::socket::shutdown_both, ignored);
    }

    /// Reader thread feeds the mailbox; this thread renders whatever is
    /// newest once the previous frame is out.
    void stream(Connection& conn, Request req) {
        namespace websocket = boost::beast::websocket;
        websocket::stream<tcp::socket&> ws(conn.socket);
        boost::system::error_code ec;
        ws.accept(req, ec);
        if (ec) return;
        LatestMailbox<std::pair<std::uint64_t, FrameRequest>> mailbox;
        {
            std::lock_guard lock(conn.mutex);
            conn.onShutdown = [&mailbox] { mailbox.close(); };
        }
        std::mutex writeMutex;
        std::thread reader([&] {
            boost::beast::flat_buffer buf;
            while (true) {
                boost::system::error_code rec;
                ws.read(buf, rec);
                if (rec) break;
                const std::string text = boost::beast::buffers_to_string(buf.data());
                buf.consume(buf.size());
                ++streamMessages_;
                try {
                    mailbox.post(parse_stream_message(text, scene_));
                } catch (const Error& e) {
                    std::lock_guard lock(writeMutex);
                    ws.text(true);
                    boost::system::error_code wec;
                    ws.write(boost::asio::buffer(json{{"error", e.what()}}.dump()), wec);
                }
            }
            mailbox.close();
        });
        while (auto msg = mailbox.take()) {
            if (beforeStreamRender_) beforeStreamRender_(msg->first);
            std::string payload(8, '\0');
            for (int b = 0; b < 8; ++b) payload[b] = static_cast<char>((msg->first >> (8 * b)) & 0xff);
            payload += render_ppm(msg->second);
            std::lock_guard lock(writeMutex);
            ws.binary(true);
            ws.write(boost::asio::buffer(payload), ec);
            if (ec) break;
        }
        boost::system::error_code ignored;
        conn.socket.shutdown(tcp::socket::shutdown_both, ignored);
        reader.join();
        std::lock_guard lock(conn.mutex);
        conn.onShutdown = nullptr;
    }

    const Scene& scene_;
    std::filesystem::path staticDir_;
    boost::asio::io_context io_;
    tcp::acceptor acceptor_;
    unsigned short port_ = 0;
    std::thread acceptThread_;
    std::mutex stateMutex_;
    std::condition_variable stopCv_;
    bool stopping_ = false;
    std::list<std::shared_ptr<Connection>> connections_;
    std::mutex renderMutex_;
    std::atomic<long long> renders_{0};
    std::atomic<long long> streamMessages_{0};
    std::function<void(std::uint64_t)> beforeStreamRender_;
};

}  // namespace mesoray
