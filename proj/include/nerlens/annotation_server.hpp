// Copyright 2026 The nerlens Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// HTTP/JSON front end for AnnotationStudy.
//
//   GET  /api/batch?annotator=ID  -> blinded batch (200), 400 without an id,
//                                    404 when no batch is left
//   POST /api/answers             -> {"annotator_id", "answers": [{"item_id",
//                                    "selected": [...]}]}; 200, 400, 404, 409
//   GET  /api/report              -> StudyReport JSON; requires the admin
//                                    token in X-Admin-Token or ?token=

#ifndef NERLENS_ANNOTATION_SERVER_HPP_
#define NERLENS_ANNOTATION_SERVER_HPP_

#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "nerlens/annotation.hpp"

namespace nerlens {

struct ServerOptions {
  std::string admin_token;  // empty disables /api/report
  std::string static_dir;   // optional UI bundle served at /
  QcOptions qc;
};

namespace internal {

inline void SendJson(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void SendError(httplib::Response& res, int status, const std::string& msg) {
  SendJson(res, status, {{"error", msg}});
}

}  // namespace internal

// Registers the endpoints on `server`. `study` must outlive it.
inline void InstallAnnotationRoutes(httplib::Server& server, AnnotationStudy& study,
                                    const ServerOptions& opt) {
  using internal::SendError;
  using internal::SendJson;

  server.Get("/api/batch", [&study](const httplib::Request& req, httplib::Response& res) {
    const std::string annotator =
        req.has_param("annotator") ? req.get_param_value("annotator") : "";
    if (annotator.empty()) return SendError(res, 400, "annotator is required");
    const AnnotationBatch* b = study.NextBatch(annotator);
    if (b == nullptr) return SendError(res, 404, "no unfinished batch");
    SendJson(res, 200, BlindedBatchJson(*b, study.labels()));
  });

  server.Post("/api/answers", [&study](const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return SendError(res, 400, "body is not JSON");
    }
    std::string annotator;
    std::vector<SubmittedSelection> selections;
    try {
      annotator = body.at("annotator_id").get<std::string>();
      const auto& answers = body.at("answers");
      if (!answers.is_array()) return SendError(res, 400, "answers must be a list");
      for (const auto& a : answers) {
        selections.push_back({a.at("item_id").get<std::string>(),
                              a.at("selected").get<std::vector<std::string>>()});
      }
    } catch (const nlohmann::json::exception& e) {
      return SendError(res, 400, std::string("malformed payload: ") + e.what());
    }
    const SubmitResult r = study.Submit(annotator, selections);
    switch (r.status) {
      case SubmitStatus::kOk:
        return SendJson(res, 200, {{"accepted", r.accepted}});
      case SubmitStatus::kBadRequest:
        return SendError(res, 400, r.message);
      case SubmitStatus::kNotFound:
        return SendError(res, 404, r.message);
      case SubmitStatus::kConflict:
        return SendError(res, 409, r.message);
    }
  });

  server.Get("/api/report", [&study, opt](const httplib::Request& req,
                                          httplib::Response& res) {
    std::string token = req.get_header_value("X-Admin-Token");
    if (token.empty() && req.has_param("token")) token = req.get_param_value("token");
    if (opt.admin_token.empty() || token != opt.admin_token) {
      return SendError(res, 403, "admin token required");
    }
    SendJson(res, 200, StudyReportToJson(study.Report(opt.qc)));
  });

  if (!opt.static_dir.empty()) server.set_mount_point("/", opt.static_dir);
}

}  // namespace nerlens

#endif  // NERLENS_ANNOTATION_SERVER_HPP_
