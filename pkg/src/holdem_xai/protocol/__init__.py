from .parse import (
    DIRECTIONS,
    FIELD_NAMES,
    MALFORMED,
    MISSING,
    VALUE,
    ExplanationSignature,
    FieldClaim,
    FirstPersonArtifact,
    OracleJSONError,
    OracleRangeError,
    OracleReport,
    OracleSchemaError,
    ProfileBlockMissing,
    ProfileProposal,
    ProtocolParseError,
    SecondPersonAuditReport,
    UnrecoverableArtifact,
    decision_json,
    format_first_person,
    parse_explanation_fields,
    parse_first_person,
    parse_opponent_profile,
    parse_oracle_json,
)
from .render import (
    DecisionContext,
    RenderError,
    Template,
    format_profiles,
    format_stats_summary,
    load_template,
    prompt_hash,
    render_decision_prompt,
    render_oracle_first_person,
    render_oracle_second_person,
    render_profile_prompt,
    template_hashes,
)
