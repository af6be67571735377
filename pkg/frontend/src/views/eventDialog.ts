// Create/edit form for anomalous events. Detected events are never removed:
// deleting one hides it (the journal keeps the original); manual events can
// be deleted outright. Edits round-trip through the API only.

import { ApiClient } from "../api";
import { clear, h } from "../dom";
import { BrushRange, ViewState } from "../state";
import { EventRecord, toIso } from "../types";

type Mode = { kind: "closed" } | { kind: "create"; station: string; attribute: string; range: BrushRange } | { kind: "edit"; event: EventRecord };

export class EventDialog {
  readonly root: HTMLElement;
  private mode: Mode = { kind: "closed" };
  private errorBox: HTMLElement;

  constructor(
    private api: ApiClient,
    private state: ViewState,
    private onSaved: () => void,
  ) {
    this.errorBox = h("div", { class: "form-error" });
    this.root = h("div", { class: "event-dialog hidden" });
  }

  openCreate(station: string, attribute: string, range: BrushRange): void {
    this.mode = { kind: "create", station, attribute, range };
    this.render();
  }

  openEdit(event: EventRecord): void {
    this.mode = { kind: "edit", event };
    this.render();
  }

  close(): void {
    this.mode = { kind: "closed" };
    this.render();
  }

  private field(label: string, input: HTMLElement): HTMLElement {
    return h("label", { class: "field" }, h("span", {}, label), input);
  }

  private render(): void {
    clear(this.root);
    clear(this.errorBox);
    if (this.mode.kind === "closed") {
      this.root.classList.add("hidden");
      return;
    }
    this.root.classList.remove("hidden");

    const editing = this.mode.kind === "edit" ? this.mode.event : null;
    const start = h("input", {
      name: "start",
      value: editing ? editing.start : toIso(this.mode.kind === "create" ? this.mode.range.from : 0),
    });
    const end = h("input", {
      name: "end",
      value: editing ? editing.end : toIso(this.mode.kind === "create" ? this.mode.range.to : 0),
    });
    const severity = h("select", { name: "severity" });
    for (let s = 0; s <= 4; s++) {
      const opt = h("option", { value: String(s) }, String(s));
      if ((editing ? editing.severity : 2) === s) opt.setAttribute("selected", "selected");
      severity.append(opt);
    }
    const tags = h("input", { name: "tags", value: editing ? editing.tags.join(", ") : "" });
    const comment = h("input", { name: "comment", value: editing ? editing.comment : "" });

    const title =
      this.mode.kind === "create"
        ? `New event: ${this.mode.station} / ${this.mode.attribute}`
        : `Edit ${editing!.source} event ${editing!.id}`;

    const save = h("button", { class: "primary", name: "save" }, "Save");
    save.addEventListener("click", () => void this.save({ start, end, severity, tags, comment }));
    const cancel = h("button", { name: "cancel" }, "Cancel");
    cancel.addEventListener("click", () => this.close());

    const buttons = h("div", { class: "dialog-buttons" }, save, cancel);
    if (editing) {
      const remove = h(
        "button",
        { class: "danger", name: "delete" },
        editing.source === "detected" ? "Hide" : "Delete",
      );
      remove.addEventListener("click", () => void this.remove(editing.id));
      buttons.append(remove);
      const annotate = h("button", { name: "annotate" }, "Add comment");
      annotate.addEventListener("click", () => void this.annotate(editing.id, comment.value));
      buttons.append(annotate);
    }

    this.root.append(
      h("h3", {}, title),
      this.field("start (UTC)", start),
      this.field("end (UTC)", end),
      this.field("severity", severity),
      this.field("tags", tags),
      this.field("comment", comment),
      buttons,
      this.errorBox,
    );
  }

  private async save(fields: {
    start: HTMLInputElement;
    end: HTMLInputElement;
    severity: HTMLSelectElement;
    tags: HTMLInputElement;
    comment: HTMLInputElement;
  }): Promise<void> {
    const tags = fields.tags.value
      .split(",")
      .map((t) => t.trim())
      .filter(Boolean);
    try {
      if (this.mode.kind === "create") {
        await this.api.createEvent({
          station_id: this.mode.station,
          attribute: this.mode.attribute,
          start: fields.start.value.trim(),
          end: fields.end.value.trim(),
          severity: Number(fields.severity.value),
          tags,
          comment: fields.comment.value,
          experiment_id: this.state.experimentId || undefined,
          dataset_id: this.state.datasetId || undefined,
        });
      } else if (this.mode.kind === "edit") {
        await this.api.modifyEvent(this.mode.event.id, {
          start: fields.start.value.trim(),
          end: fields.end.value.trim(),
          severity: Number(fields.severity.value),
          tags,
          comment: fields.comment.value,
        });
      }
      this.close();
      this.onSaved();
    } catch (err) {
      this.errorBox.textContent = String((err as Error).message ?? err);
    }
  }

  private async remove(id: string): Promise<void> {
    try {
      await this.api.deleteEvent(id);
      this.close();
      this.onSaved();
    } catch (err) {
      this.errorBox.textContent = String((err as Error).message ?? err);
    }
  }

  private async annotate(id: string, text: string): Promise<void> {
    try {
      await this.api.annotateEvent(id, text, []);
      this.close();
      this.onSaved();
    } catch (err) {
      this.errorBox.textContent = String((err as Error).message ?? err);
    }
  }
}
