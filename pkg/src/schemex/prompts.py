"""Prompt templates for every model call the engine makes.

Template bodies are fixed verbatim, including line breaks and trailing
spaces (several response-format lines end with two significant spaces; do
not let an editor strip them). Placeholders look like {name}; rendering
replaces exactly the declared bindings and nothing else, so the JSON
braces inside format sections pass through untouched.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import InvariantViolation, MissingBindingError, UnknownPlaceholderError

PLACEHOLDER = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


class ResponseFormat(Enum):
    STRUCTURED_OBJECT = "structured_object"
    CLUSTER_PROSE = "cluster_prose"
    FREE_TEXT = "free_text"


@dataclass(frozen=True)
class PromptTemplate:
    """One template: body text, its placeholders, and the reply shape.

    expected_keys are the top-level keys a structured reply must carry;
    empty for prose and free-text replies.
    """

    id: str
    body: str
    response_format: ResponseFormat
    expected_keys: tuple[str, ...] = ()

    def __post_init__(self):
        if self.response_format is not ResponseFormat.STRUCTURED_OBJECT and self.expected_keys:
            raise InvariantViolation(f"{self.id}: only structured replies declare keys")

    @property
    def required_bindings(self) -> frozenset[str]:
        return frozenset(PLACEHOLDER.findall(self.body))


def render_prompt(template: PromptTemplate, bindings: dict[str, str]) -> str:
    """Substitute bindings into a template body.

    The binding set must match the template's placeholders exactly: a
    placeholder without a binding raises MissingBindingError, a binding
    without a placeholder raises UnknownPlaceholderError.
    """
    required = template.required_bindings
    for name in sorted(required):
        if name not in bindings:
            raise MissingBindingError(name)
    for name in sorted(bindings):
        if name not in required:
            raise UnknownPlaceholderError(name)
    # single pass, so placeholder-shaped text inside a bound value is not
    # substituted again
    return PLACEHOLDER.sub(lambda m: bindings[m.group(1)], template.body)


CLUSTER_EXAMPLES = PromptTemplate(
    id="cluster_examples",
    response_format=ResponseFormat.CLUSTER_PROSE,
    expected_keys=(),
    body="""I’m learning how to {content_type}. 
Analyze the following examples to identify clusters based on STRUCTURAL and RHETORICAL patterns.
Focus on how the content is constructed and presented—not just what it’s about.
For textual examples, examine rhetorical organization.
For multimodal examples, consider how different modalities interact structurally and rhetorically.

For each cluster:
Name the structural approach (not just the topic)
List 2–3 shared structural features
Include the example IDs in that cluster

Clustering Rules:
Assign every example to exactly one cluster
Use all examples—no omissions or duplicates
Group based on structure, not content themes or ID order

Response Format:
Cluster 1: [Cluster Name]  
Common Features:  
- [Feature 1]  
- [Feature 2]  
Examples:  
- Example [ID]  
- Example [ID]  
...  
Total number of examples: [Number]  

Cluster 2: [Cluster Name]  
...

Examples to analyze: {examples}{input_context}""",
)


FEATURE_MATRIX = PromptTemplate(
    id="feature_matrix",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('mapping',),
    body="""I’m learning how to {content_type}.
Help me analyze how each example in the cluster {cluster_name} demonstrates the identified common features.
Common Features: {common_features}
Examples: {examples}

Your Task:
For each example:
Indicate whether it demonstrates each feature:
"Yes" = Clearly demonstrates the feature
"Partial" = Feature is present but limited, implied, or modified
"No" = Feature is not present or is inconsistent with the definition

Include:
A brief explanation
A direct snippet from the example (if marked "Yes" or "Partial")

Format Requirements:
Return your output as a valid JSON object with the following structure:
{
  "mapping": [
    {
      "example_index": "EXAMPLE_ID",
      "example_snippet": "First 50 characters of the example...",
      "feature_mapping": [
        {
          "feature": "Feature 1",
          "feature_id": "F1",
          "applies": "Yes/No/Partial",
          "explanation": "Brief explanation of classification",
          "snippet": "Verbatim quote from example that demonstrates the feature"
        },
        ...
      ]
    },
    ...
  ]
}""",
)


INFER_DIMENSIONS = PromptTemplate(
    id="infer_dimensions",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('dimensions', 'example_mappings'),
    body="""I’m learning how to {user_goal}.
Analyze the following examples from the cluster: {cluster_name}
Examples: {examples_str}{input_context}

Your Task:
Help me infer the structural commonalities that define this cluster. Focus on identifying the key content dimensions that shape the narrative and composition.

Important Constraints — AVOID OVERFITTING:
Only identify dimensions shared across multiple examples
Focus on cluster-wide structural patterns, not individual quirks
Broaden dimensions only if needed to make them general enough for the cluster

For Each Dimension:
Give it a clear, descriptive name
Briefly explain what the dimension captures
Include verbatim snippets from examples that demonstrate it
For Each Example:
For every dimension, show:
Whether it applies: Yes, Partial, or No
A short explanation of why
A verbatim snippet from the example (if marked "Yes")
If no snippet can be found, use "Partial" or "No"
Snippet Rules:
Only use exact text from the examples—no paraphrasing or made-up text
If a snippet can’t be found, say so—never fabricate one

Applies Judgment:
Yes = Strong, specific snippet available
Partial = Present, but limited or implicit
No = Absent or not applicable

Output Format:
Return your response as a valid JSON object.
{
  "dimensions": [
    {
      "name": "Dimension name",
      "description": "Brief explanation",
      "examples": [
        {
          "example_id": "1",
          "snippet": "Verbatim snippet from Example 1"
        },
        ...
      ]
    },
    ...
  ],
  "example_mappings": [
    {
      "example_id": "1",
      "dimension_applications": [
        {
          "dimension": "Dimension name",
          "applies": "Yes/No/Partial",
          "explanation": "Brief explanation",
          "snippet": "Exact text from this example"
        },
        ...
      ]
    },
    ...
  ]
}""",
)


DIMENSION_ATTRIBUTES = PromptTemplate(
    id="dimension_attributes",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('dimensions', 'attributes_examples'),
    body="""I’m learning how to {user_goal}.
Please analyze the following examples from the cluster: {cluster_name}
Examples: {examples_full_text}{input_context}

PART 1: IDENTIFY DIMENSION ATTRIBUTES
You’ve already identified the following dimensions:
Dimensions: {dimensions_text}
Your task now is to define key attributes under each dimension, based on patterns that are consistent across the examples in this cluster.
Use only the following example IDs: Example IDs: {example_ids_text}

Attribute Requirements:
Each attribute must appear in at least 50
Keep attributes broad enough to apply across examples, but still specific and observable
Exclude attributes that are too narrow, ambiguous, or inconsistently implemented
Evaluate every example against every attribute—no omissions

For Each Dimension, Provide:
Detailed Attributes: Clear, concrete, 1-sentence descriptions of each attribute
Concise Summaries: 1–2 word phrases summarizing each attribute (in the same order)

PART 2: ATTRIBUTE IMPLEMENTATION IN EXAMPLES
For every attribute in Part 1, assess how each example implements it.
Use the following classifications:
"YES" — Clearly and fully present (must include a direct quote)
"PARTIAL" — Present but limited, modified, or implicit
"NO" — Not present or structurally inconsistent with the attribute

Implementation Guidelines:
Always use the actual example IDs from the dataset
Provide a verbatim quote from the example if the classification is “YES” (never paraphrase)
Include an explanation for every example, even if “NO”
Never fabricate text—if you can’t find a quote, use "PARTIAL" or "NO"
Evaluate every example for every attribute, even if it’s “NO”

Critical Format Requirements (Strict JSON Only):
{
  "dimensions": {
    "Dimension Name": {
      "detailed": ["Detailed attribute 1", "Detailed attribute 2", ...],
      "concise": ["Summary 1", "Summary 2", ...]
    }
  },
  "attributes_examples": {
    "Dimension Name": {
      "Detailed attribute 1": [
        {
          "example_id": "ACTUAL_ID_1",
          "quote": "Exact quote from example",
          "explanation": "How this quote demonstrates the attribute",
          "classification": "YES"
        },
        {
          "example_id": "ACTUAL_ID_2",
          "quote": "",
          "explanation": "Why this example does not include this attribute",
          "classification": "NO"
        }
      ],
      ...
    }
  }
}""",
)


OVERALL_ATTRIBUTES = PromptTemplate(
    id="overall_attributes",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('overall_attributes', 'overall_attributes_examples'),
    body="""I’m learning how to {user_goal}.
Please analyze the following examples to identify overall structural patterns that are consistent across most of them.
Examples: {examples_full_text}{input_context}
Use only these example IDs in your analysis: Example IDs: {example_ids_text}

Goal: Identify Overall Attributes
Your task is to identify broad structural or compositional attributes that appear across the majority of examples, regardless of individual dimensions.
Look for consistent patterns in areas like:
Length – Word/sentence count range that appears in most examples
Format – Layout elements (e.g. paragraph count, headers, visual markers)
Tone – Overall voice, formality, or affective stance
Organization – Common sequence or structure across examples
Other global traits – Any other recurring patterns seen in most examples
You must include at least one attribute about length or format, and one about organization.

Attribute Guidelines
Each attribute must appear in at least 50
Keep attributes broad enough to apply across many examples
Ground attributes in observable patterns (not interpretations)

For Each Attribute:
Provide a detailed description: a one-sentence explanation of the observable pattern
Provide a concise summary: a 1–2 word label for each attribute
The number of concise summaries must match the number of detailed attributes.

Attribute Application per Example
For each attribute, evaluate every example:
YES = Attribute is clearly and fully present (must include direct quote)
PARTIAL = Attribute is present but limited, modified, or implicit
NO = Attribute is absent or structurally inconsistent

For every example, include:
Verbatim quote from the example (if applicable)
A brief explanation of your classification
Classification: "YES", "PARTIAL", or "NO"

STRICT FORMAT (DO NOT DEVIATE):
{
  "overall_attributes": {
    "detailed": ["Detailed attribute 1", "Detailed attribute 2", "Detailed attribute 3"],
    "concise": ["Concise1", "Concise2", "Concise3"]
  },
  "overall_attributes_examples": {
    "Detailed attribute 1": [
      {
        "example_id": "ACTUAL_ID_1",
        "quote": "Exact quote from example",
        "explanation": "Why this example demonstrates the attribute",
        "classification": "YES"
      },
      {
        "example_id": "ACTUAL_ID_2",
        "quote": "",
        "explanation": "Why this example does not include the attribute",
        "classification": "NO"
      },
      ...
    ],
    "Detailed attribute 2": [...],
    "Detailed attribute 3": [...]
  }
}""",
)


DIMENSION_VALUE = PromptTemplate(
    id="dimension_value",
    response_format=ResponseFormat.FREE_TEXT,
    expected_keys=(),
    body="""I am trying to {current_user_goal}.
Given the following input: {input_text}
I need you to generate only one component of the output—not the full output.
Component to generate: {dim_name} – {dim_description}
Component Requirements: {attributes_text}

Important:
Focus only on generating the specified component.
Do not include other parts of the output.
Follow the given requirements closely.
""",
)


COMPOSE_OUTPUT = PromptTemplate(
    id="compose_output",
    response_format=ResponseFormat.FREE_TEXT,
    expected_keys=(),
    body="""I am trying to {current_user_goal}.
Given this input: {input_text}
And these dimension values: {dimensions_text}
Help me {current_user_goal} by generating a complete output.

Make sure to:
Integrate the dimension values effectively
Satisfy the following overall requirements: {overall_arrtibutes}
Output the final content directly. 
""",
)


CONTRAST_ANALYSIS = PromptTemplate(
    id="contrast_analysis",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('dimension_analysis',),
    body="""Your task is to analyze the gap between a generated output and a gold/reference example, in order to improve the schema itself.

Goal:
Your focus is on identifying what the schema is missing that would help the generated output better align with the gold example in more meaningful and sophisticated ways.

Inputs:
Schema: {schema_text}
Dimension Values: {dimension_values_text}
Generated Output: {generated_output}
Gold Example (Reference): {gold_example}

For Each Dimension:
Your analysis should address:
Patterns or qualities in the gold example that are not captured in the current schema
Gaps between the generated output and the gold example that a stronger schema could help bridge
Deeper or more nuanced attributes that could make the schema more generative, precise, and aligned with high-quality outputs

Think About:
What deeper structural or rhetorical qualities exist in the gold example that is missing from the schema?
Where is the schema too shallow, vague, or rigid?
How can the schema be refined or extended without overfitting?

For Each Dimension, Suggest 2–3 Improvements, Using these Tags:
[ADD] — Introduce a new attribute or pattern
[DEEPEN] — Make an existing attribute more sophisticated or layered
[REFINE] — Clarify or better define an existing attribute
[RESTRUCTURE] — Reorganize or reconceptualize the dimension
Also, include a section for Overall (cross-dimensional insights).

Output Format (STRICT):
Return your response as valid JSON using the following structure.
{
  "dimension_analysis": {
    "Dimension Name 1": {
      "analysis": "Analysis of deeper patterns in this dimension that aren't captured by the schema",
      "improvements": [
        "[ADD] Description of a new attribute",
        "[DEEPEN] Suggestion for making an existing attribute more sophisticated",
        "[REFINE] Clarify an attribute definition",
        "[RESTRUCTURE] Suggest restructuring if needed"
      ]
    },
    "Dimension Name 2": {
      "analysis": "Analysis of missing or underdefined qualities relevant to this dimension",
      "improvements": [
        "[ADD] ...",
        "[DEEPEN] ..."
      ]
    },
    "Overall": {
      "analysis": "Insights about patterns or improvements needed across dimensions",
      "improvements": [
        "[ADD] Cross-dimensional schema improvement",
        "[RESTRUCTURE] Suggest schema-wide restructuring"
      ]
    }
  }
}""",
)


SEGMENT_ALIGNMENT = PromptTemplate(
    id="segment_alignment",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('segments', 'dimension_analysis'),
    body="""Your task is to create a detailed, structured comparison between two texts using schema dimensions to guide your analysis.
TEXTS TO COMPARE:
TEXT 1 (Generated Output): {generated_output}
TEXT 2 (Gold Example): {gold_example}
SCHEMA DIMENSIONS: {schema_text}

TASK:
Segment both texts and align corresponding parts side-by-side. For each segment:
Indicate which schema dimension (if any) the segment primarily reflects
Provide a brief annotation that explains the quality, relevance, or difference of this segment compared to its counterpart
Include the start and end character indices from the original source text
Set "dimension": null if the segment doesn’t clearly relate to any dimension
Rate the importance of this segment as "high", "medium", or "low" based on its role in conveying schema-aligned meaning or structure

CRITICAL REQUIREMENTS:
Cover the full content of both texts—no omissions allowed
Do not duplicate content across segments—each character should appear in exactly one segment
Accuracy of start_index and end_index is essential—these must correspond exactly to the characters in each original text
Use actual JSON null (not the string "null") when a segment doesn’t map to any dimension

OUTPUT FORMAT (Strict):
{
  "segments": [
    {
      "id": "segment_1",
      "source": "generated" | "gold",
      "text": "text of the segment",
      "start_index": 0,
      "end_index": 42,
      "dimension": "Dimension Name" | null,
      "annotation": "Brief analysis of the segment",
      "importance": "high" | "medium" | "low"
    },
    ...
  ],
  "dimension_analysis": {
    "Dimension Name 1": "Summary analysis of how this dimension compares across the two texts",
    "Dimension Name 2": "Additional dimension summary...",
    ...
  }
}""",
)


ITERATE_SCHEMA = PromptTemplate(
    id="iterate_schema",
    response_format=ResponseFormat.STRUCTURED_OBJECT,
    expected_keys=('dimensions', 'overall_attributes'),
    body="""You are helping improve a schema for AI-guided generation.
User Goal: {user_goal}
Context: {context_text}
The original schema includes:
Dimensions (each with detailed + concise attributes)
Overall attributes (for general output quality)

Your Task:
Use the suggestions below to iterate and improve the schema by:
Revising dimension attributes for clarity, depth, or generality
Adding new attributes where necessary
Improving overall attributes to enhance global output quality
Removing or simplifying overly specific attributes that may cause overfitting

Use These Inputs:
Suggested Improvements: {all_suggested_improvements}
Original Schema: {original_schema}

Critical Format Requirements:
For every dimension:
"detailed" and "concise" arrays must exist
Every "detailed" attribute must have a corresponding 
"concise" one, and vice versa
Follow the exact same JSON structure as the original schema

Final Output:
Return a valid JSON object with the same structure as the original schema, reflecting all suggested improvements.""",
)


SINGLE_PASS_BASELINE = PromptTemplate(
    id="single_pass_baseline",
    response_format=ResponseFormat.FREE_TEXT,
    expected_keys=(),
    body="""I want to learn how to {content_type}. 

Here are {number_of_examples} examples. Can you help me infer the schema (structural commonalities) among the examples? So that I can use them later to create my own. You can give me multiple schemas if there are subgroups amongst the examples - each subgroup has one different schema. 

For each schema, please outline the key dimensions (characteristic features), their corresponding attributes (descriptors of the dimension), and overall attributes (general descriptors of the structure and content of the final output). 

Give me the answer in the format: for each schema, give it a descriptive name, list corresponding examples, overall attributes, dimensions, and attributes for dimension. 

Examples to analyze: {examples}{input_context}""",
)


TEMPLATES: dict[str, PromptTemplate] = {
    CLUSTER_EXAMPLES.id: CLUSTER_EXAMPLES,
    FEATURE_MATRIX.id: FEATURE_MATRIX,
    INFER_DIMENSIONS.id: INFER_DIMENSIONS,
    DIMENSION_ATTRIBUTES.id: DIMENSION_ATTRIBUTES,
    OVERALL_ATTRIBUTES.id: OVERALL_ATTRIBUTES,
    DIMENSION_VALUE.id: DIMENSION_VALUE,
    COMPOSE_OUTPUT.id: COMPOSE_OUTPUT,
    CONTRAST_ANALYSIS.id: CONTRAST_ANALYSIS,
    SEGMENT_ALIGNMENT.id: SEGMENT_ALIGNMENT,
    ITERATE_SCHEMA.id: ITERATE_SCHEMA,
    SINGLE_PASS_BASELINE.id: SINGLE_PASS_BASELINE,
}
