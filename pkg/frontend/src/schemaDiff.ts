/** Display diff between two schema revisions.
 *
 * Mirrors the service's revision-diff semantics for presentation only:
 * dimensions match by id, attributes match by concise label within their
 * scope, and a removal paired with an addition carrying identical detailed
 * text reads as a rename. The scope label "Overall" covers attributes
 * outside any dimension.
 */

import type { SchemaView } from "./api.js";

export type DiffEntryKind =
  | "dimension-added"
  | "dimension-removed"
  | "dimension-renamed"
  | "attribute-added"
  | "attribute-removed"
  | "attribute-renamed"
  | "detail-changed"
  | "description-changed";

export interface DiffEntry {
  kind: DiffEntryKind;
  scopeLabel: string;
  text: string;
}

interface Scope {
  key: string | null;
  label: string;
  before: Map<string, string>;
  after: Map<string, string>;
}

function attributeMap(attributes: ReadonlyArray<{ concise: string; detailed: string }>): Map<string, string> {
  return new Map(attributes.map((attribute) => [attribute.concise, attribute.detailed]));
}

/** Ordered entries describing how `child` differs from `parent`. */
export function diffSchemas(parent: SchemaView, child: SchemaView): DiffEntry[] {
  const entries: DiffEntry[] = [];
  const parentDims = new Map(parent.dimensions.map((dimension) => [dimension.id, dimension]));
  const childDims = new Map(child.dimensions.map((dimension) => [dimension.id, dimension]));

  for (const [id, dimension] of parentDims) {
    if (!childDims.has(id)) {
      entries.push({
        kind: "dimension-removed",
        scopeLabel: dimension.name,
        text: `Removed dimension "${dimension.name}".`,
      });
    }
  }
  for (const [id, dimension] of childDims) {
    if (!parentDims.has(id)) {
      entries.push({
        kind: "dimension-added",
        scopeLabel: dimension.name,
        text: `Added dimension "${dimension.name}" with ${dimension.attributes.length} attribute(s).`,
      });
    }
  }

  const scopes: Scope[] = [];
  for (const [id, before] of parentDims) {
    const after = childDims.get(id);
    if (!after) {
      continue;
    }
    if (before.name !== after.name) {
      entries.push({
        kind: "dimension-renamed",
        scopeLabel: after.name,
        text: `Renamed dimension "${before.name}" to "${after.name}".`,
      });
    }
    if (before.description !== after.description) {
      entries.push({
        kind: "description-changed",
        scopeLabel: after.name,
        text: `Updated the description of "${after.name}".`,
      });
    }
    scopes.push({
      key: id,
      label: after.name,
      before: attributeMap(before.attributes),
      after: attributeMap(after.attributes),
    });
  }
  scopes.push({
    key: null,
    label: "Overall",
    before: attributeMap(parent.overall_attributes),
    after: attributeMap(child.overall_attributes),
  });

  for (const scope of scopes) {
    const gone = [...scope.before.keys()].filter((concise) => !scope.after.has(concise));
    const added = [...scope.after.keys()].filter((concise) => !scope.before.has(concise));
    for (const oldName of [...gone]) {
      const renamedTo = added.find((newName) => scope.before.get(oldName) === scope.after.get(newName));
      if (renamedTo !== undefined) {
        entries.push({
          kind: "attribute-renamed",
          scopeLabel: scope.label,
          text: `Renamed attribute "${oldName}" to "${renamedTo}" under ${scope.label}.`,
        });
        gone.splice(gone.indexOf(oldName), 1);
        added.splice(added.indexOf(renamedTo), 1);
      }
    }
    for (const concise of gone) {
      entries.push({
        kind: "attribute-removed",
        scopeLabel: scope.label,
        text: `Removed attribute "${concise}" under ${scope.label}.`,
      });
    }
    for (const concise of added) {
      entries.push({
        kind: "attribute-added",
        scopeLabel: scope.label,
        text: `Added attribute "${concise}" under ${scope.label}: ${scope.after.get(concise)}`,
      });
    }
    for (const [concise, detailed] of scope.before) {
      const updated = scope.after.get(concise);
      if (updated !== undefined && updated !== detailed) {
        entries.push({
          kind: "detail-changed",
          scopeLabel: scope.label,
          text: `Reworded attribute "${concise}" under ${scope.label}.`,
        });
      }
    }
  }
  return entries;
}
