#pragma once

// HTTP clients for model servers. One JSON body per call; images travel as
// base64 PNG fields. Wire format: docs/backend_protocol.md.

#include <map>
#include <memory>
#include <optional>

#include "talkfashion/backends.hpp"

namespace talkfashion {

std::shared_ptr<ChatBackend> make_remote_chat(const BackendConfig& config);
std::shared_ptr<EmbeddingBackend> make_remote_embedding(const BackendConfig& config);
std::shared_ptr<RefineBackend> make_remote_refiner(const BackendConfig& config);
std::shared_ptr<SegmentBackend> make_remote_segmenter(const BackendConfig& config);
std::shared_ptr<HumanParserBackend> make_remote_human_parser(const BackendConfig& config);
std::shared_ptr<PoseBackend> make_remote_pose(const BackendConfig& config);
std::shared_ptr<TryOnBackend> make_remote_try_on(const BackendConfig& config);
std::shared_ptr<EditBackend> make_remote_editor(const BackendConfig& config);

using BackendConfigs = std::map<BackendKind, BackendConfig>;

// Default (mock) config for every kind, with env overrides applied.
BackendConfigs default_backend_configs();

// Builds each kind per its config; kinds missing from `configs` are mocks.
// Mock parsing, segmentation and pose share one parser seeded with
// `fixture_parse`.
BackendSet make_backends(const BackendConfigs& configs,
                         std::optional<ParseMap> fixture_parse = std::nullopt);

}  // namespace talkfashion
