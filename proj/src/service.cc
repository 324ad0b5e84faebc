#include "chromap/service.h"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "chromap/bytes.h"
#include "chromap/raster.h"
#include "chromap/resample.h"

namespace chromap {

namespace {

constexpr char kParamsMagic[] = "NPPR";
constexpr char kProjectionsMagic[] = "NPPJ";
constexpr char kOctetStream[] = "application/octet-stream";

void write_header(ByteWriter& w, const char* magic, int k, const Fingerprint& fp) {
  w.text(magic);
  w.u8(kWireVersion);
  w.u16(static_cast<std::uint16_t>(k));
  w.bytes(fp.bytes);
}

std::pair<int, Fingerprint> read_header(ByteReader& r, const char* magic) {
  if (r.text(4) != magic) throw WireFormatError(std::string("expected ") + magic + " payload");
  const std::uint8_t version = r.u8();
  if (version != kWireVersion) throw WireFormatError("unsupported wire version " + std::to_string(version));
  const int k = r.u16();
  if (k < 1) throw WireFormatError("wire k must be >= 1");
  Fingerprint fp;
  const auto b = r.bytes(8);
  std::copy(b.begin(), b.end(), fp.bytes.begin());
  return {k, fp};
}

std::string to_string(const std::vector<std::uint8_t>& bytes) { return std::string(bytes.begin(), bytes.end()); }

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

ServiceResponse error_response(int status, const std::string& message) {
  ServiceResponse r;
  r.status = status;
  r.content_type = "application/json";
  r.body = nlohmann::json{{"error", message}}.dump();
  return r;
}

std::string etag_for(const Fingerprint& fp) { return "\"" + fp.hex() + "\""; }

}  // namespace

std::vector<std::uint8_t> encode_params_response(const ParamResponse& response) {
  if (response.d.k() != response.r.k()) throw WireFormatError("d and r differ in k");
  ByteWriter w;
  write_header(w, kParamsMagic, response.k(), response.fingerprint);
  w.f32s(response.d.values());
  w.f32s(response.r.values());
  return w.take();
}

ParamResponse decode_params_response(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto [k, fp] = read_header(r, kParamsMagic);
    const auto kk = static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
    ParamResponse out;
    out.fingerprint = fp;
    out.d = ColorMapMatrix(k, r.f32s(kk));
    out.r = ColorMapMatrix(k, r.f32s(kk));
    if (!r.done()) throw WireFormatError("trailing bytes after NPPR payload");
    return out;
  } catch (const TruncatedError& e) {
    throw WireFormatError(e.what());
  }
}

std::vector<std::uint8_t> encode_projections_response(const ProjectionsResponse& response) {
  ByteWriter w;
  write_header(w, kProjectionsMagic, response.k(), response.fingerprint);
  w.f32s(response.normalizing.p.data());
  w.f32s(response.normalizing.q.data());
  w.f32s(response.stylizing.p.data());
  w.f32s(response.stylizing.q.data());
  return w.take();
}

ProjectionsResponse decode_projections_response(std::span<const std::uint8_t> bytes) {
  try {
    ByteReader r(bytes);
    auto [k, fp] = read_header(r, kProjectionsMagic);
    const auto n = static_cast<std::size_t>(k);
    ProjectionsResponse out;
    out.fingerprint = fp;
    auto read_pair = [&](ProjectionRole role) {
      ProjectionPair pair;
      pair.role = role;
      pair.p = Tensor({3, n}, r.f32s(3 * n));
      pair.q = Tensor({n, 3}, r.f32s(3 * n));
      return pair;
    };
    out.normalizing = read_pair(ProjectionRole::kNormalizing);
    out.stylizing = read_pair(ProjectionRole::kStylizing);
    if (!r.done()) throw WireFormatError("trailing bytes after NPPJ payload");
    return out;
  } catch (const TruncatedError& e) {
    throw WireFormatError(e.what());
  }
}

ProjectionsResponse projections_of(const StyleModel& model) {
  return {model.fingerprint(), model.params().normalizing, model.params().stylizing};
}

ParamService::ParamService(ServiceConfig config) : config_(config) {}

void ParamService::set_model(std::shared_ptr<const StyleModel> model) {
  std::lock_guard lock(mutex_);
  model_ = std::move(model);
}

std::shared_ptr<const StyleModel> ParamService::model() const {
  std::lock_guard lock(mutex_);
  return model_;
}

ServiceResponse ParamService::handle_params(std::string_view body) const {
  const auto model = this->model();
  if (!model) return error_response(503, "no checkpoint loaded");
  const auto bytes = as_bytes(body);
  try {
    const RasterSize size = peek_png_size(bytes);
    if (size.height > config_.max_thumbnail_side || size.width > config_.max_thumbnail_side) {
      return error_response(413, "thumbnail " + std::to_string(size.width) + "x" + std::to_string(size.height) +
                                     " exceeds the " + std::to_string(config_.max_thumbnail_side) + " pixel limit");
    }
    const Image image = decode_png(bytes);
    const StyleParams params = model->encode(image);
    ServiceResponse r;
    r.content_type = kOctetStream;
    r.body = to_string(encode_params_response({model->fingerprint(), params.d, params.r}));
    return r;
  } catch (const RasterError& e) {
    return error_response(400, std::string("undecodable thumbnail: ") + e.what());
  }
}

ServiceResponse ParamService::handle_projections(std::string_view if_none_match) const {
  const auto model = this->model();
  if (!model) return error_response(503, "no checkpoint loaded");
  ServiceResponse r;
  const std::string etag = etag_for(model->fingerprint());
  r.headers.emplace_back("ETag", etag);
  r.headers.emplace_back("Cache-Control", "no-cache");
  if (if_none_match == etag) {
    r.status = 304;
    return r;
  }
  r.content_type = kOctetStream;
  r.body = to_string(encode_projections_response(projections_of(*model)));
  return r;
}

ServiceResponse ParamService::handle_health() const {
  const auto model = this->model();
  nlohmann::json j{{"status", "ok"}, {"fingerprint", nullptr}};
  if (model) {
    j["fingerprint"] = model->fingerprint().hex();
    j["k"] = model->k();
    j["thumbnail_size"] = model->config().thumbnail_size;
  }
  ServiceResponse r;
  r.content_type = "application/json";
  r.body = j.dump();
  return r;
}

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

namespace {

void send(const ServiceResponse& in, httplib::Response& out) {
  out.status = in.status;
  for (const auto& [k, v] : in.headers) out.set_header(k, v);
  if (!in.content_type.empty()) out.set_content(in.body, in.content_type);
}

}  // namespace

HttpServer::HttpServer(ParamService& service) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  s.set_payload_max_length(64u << 20);
  s.Post("/v1/params", [&service](const httplib::Request& req, httplib::Response& res) {
    send(service.handle_params(req.body), res);
  });
  s.Get("/v1/projections", [&service](const httplib::Request& req, httplib::Response& res) {
    send(service.handle_projections(req.get_header_value("If-None-Match")), res);
  });
  s.Get("/v1/health", [&service](const httplib::Request&, httplib::Response& res) {
    send(service.handle_health(), res);
  });
  s.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match");
    res.set_header("Access-Control-Expose-Headers", "ETag");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

struct ServiceClient::Impl {
  explicit Impl(const std::string& host, int port) : client(host, port) {}
  httplib::Client client;
};

ServiceClient::ServiceClient(std::string host, int port) : impl_(std::make_unique<Impl>(host, port)) {
  impl_->client.set_keep_alive(false);
}

ServiceClient::~ServiceClient() = default;

namespace {

std::string expect_ok(const httplib::Result& res, const char* what) {
  if (!res) throw ServiceError(0, std::string(what) + ": " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw ServiceError(res->status, std::string(what) + " returned " + std::to_string(res->status) + ": " + res->body);
  }
  return res->body;
}

}  // namespace

HealthInfo ServiceClient::health() {
  const std::string body = expect_ok(impl_->client.Get("/v1/health"), "GET /v1/health");
  const auto j = nlohmann::json::parse(body);
  HealthInfo info;
  if (!j.at("fingerprint").is_null()) {
    info.has_model = true;
    info.fingerprint = j.at("fingerprint").get<std::string>();
    info.k = j.at("k").get<int>();
    info.thumbnail_size = j.at("thumbnail_size").get<int>();
  }
  return info;
}

ProjectionsResponse ServiceClient::projections() {
  const std::string body = expect_ok(impl_->client.Get("/v1/projections"), "GET /v1/projections");
  return decode_projections_response(as_bytes(body));
}

ParamResponse ServiceClient::params(const Image& thumbnail) {
  const auto png = encode_png(thumbnail);
  const std::string body = expect_ok(
      impl_->client.Post("/v1/params", reinterpret_cast<const char*>(png.data()), png.size(), "image/png"),
      "POST /v1/params");
  return decode_params_response(as_bytes(body));
}

Image remote_transfer(ServiceClient& client, const Image& content, const Image& style, int patch_size) {
  const HealthInfo health = client.health();
  if (!health.has_model) throw ServiceError(503, "server has no checkpoint loaded");
  const ProjectionsResponse proj = client.projections();
  const ParamResponse c = client.params(downsample(content, health.thumbnail_size).image());
  const ParamResponse s = client.params(downsample(style, health.thumbnail_size).image());
  if (c.fingerprint != proj.fingerprint || s.fingerprint != proj.fingerprint) {
    throw ServiceError(409, "server model changed during transfer");
  }
  TiledOptions opts;
  opts.patch_size = patch_size;
  const Image z = dncm_apply_tiled(content, c.d, proj.normalizing, opts);
  opts.clamp = Clamp::kYes;
  return dncm_apply_tiled(z, s.r, proj.stylizing, opts);
}

}  // namespace chromap
