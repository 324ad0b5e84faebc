#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chromap/dncm.h"
#include "chromap/image.h"
#include "chromap/model.h"
#include "chromap/style_model.h"

namespace chromap {

inline constexpr std::uint8_t kWireVersion = 1;

// POST /v1/params body: "NPPR" | version u8 | k u16 | fingerprint (8) | d | r,
// matrices as k^2 little-endian f32 row-major. 15 + 8k^2 bytes.
struct ParamResponse {
  Fingerprint fingerprint;
  ColorMapMatrix d = ColorMapMatrix::identity(1);
  ColorMapMatrix r = ColorMapMatrix::identity(1);

  int k() const { return d.k(); }
  bool operator==(const ParamResponse&) const = default;
};

// GET /v1/projections body: "NPPJ" | version u8 | k u16 | fingerprint (8) |
// Pn [3 x k] | Qn [k x 3] | Ps [3 x k] | Qs [k x 3]. 15 + 48k bytes.
struct ProjectionsResponse {
  Fingerprint fingerprint;
  ProjectionPair normalizing;
  ProjectionPair stylizing;

  int k() const { return normalizing.k(); }
  bool operator==(const ProjectionsResponse&) const = default;
};

class WireFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> encode_params_response(const ParamResponse& response);
ParamResponse decode_params_response(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_projections_response(const ProjectionsResponse& response);
ProjectionsResponse decode_projections_response(std::span<const std::uint8_t> bytes);
ProjectionsResponse projections_of(const StyleModel& model);

struct ServiceConfig {
  int max_thumbnail_side = 256;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

// Transport-independent request handlers over a hot-swappable model. A
// request keeps the model it started with even if set_model runs meanwhile.
class ParamService {
 public:
  explicit ParamService(ServiceConfig config = {});

  void set_model(std::shared_ptr<const StyleModel> model);
  std::shared_ptr<const StyleModel> model() const;

  ServiceResponse handle_params(std::string_view body) const;
  ServiceResponse handle_projections(std::string_view if_none_match = {}) const;
  ServiceResponse handle_health() const;

 private:
  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::shared_ptr<const StyleModel> model_;
};

// HTTP/1.1 front end with permissive CORS for the browser client.
class HttpServer {
 public:
  explicit HttpServer(ParamService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }  // 0 when the server could not be reached

 private:
  int status_;
};

struct HealthInfo {
  bool has_model = false;
  std::string fingerprint;  // hex, empty without a model
  int k = 0;
  int thumbnail_size = 0;
};

class ServiceClient {
 public:
  ServiceClient(std::string host, int port);
  ~ServiceClient();

  HealthInfo health();
  ProjectionsResponse projections();
  // Uploads the image as an 8-bit PNG.
  ParamResponse params(const Image& thumbnail);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Split deployment: only thumbnails cross the network; both DNCM stages run
// locally with the served projections and parameters.
Image remote_transfer(ServiceClient& client, const Image& content, const Image& style, int patch_size = 512);

}  // namespace chromap
