"""
Models for the sparseness laboratory

Every management command leaves a RunManifest behind: the manifest.json file
in its output directory and, when a database is configured, a row here.
"""

import uuid

from django.db import models


class RunCommand(models.TextChoices):
    """Pipeline commands that produce manifests"""
    SIMULATE = 'simulate', 'Simulate'
    MEASURE = 'measure', 'Measure'
    REGRESS = 'regress', 'Regress'
    VALIDATE = 'validate', 'Validate'


class RunManifest(models.Model):
    """
    Record of one command invocation: its configuration echo, the content
    digests of every input and output file, timing and collected warnings.
    """
    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    command = models.CharField(max_length=20, choices=RunCommand.choices)
    schema_version = models.PositiveIntegerField(default=1)
    tool_version = models.CharField(max_length=32)
    config = models.JSONField(default=dict, blank=True, help_text="Echo of the effective configuration")
    inputs = models.JSONField(default=dict, blank=True, help_text="Input path -> sha256 digest")
    outputs = models.JSONField(default=dict, blank=True, help_text="Output path -> sha256 digest")
    warnings = models.JSONField(default=list, blank=True)
    output_dir = models.CharField(max_length=500, blank=True)
    exit_code = models.SmallIntegerField(default=0)
    started_at = models.DateTimeField()
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-started_at']
        indexes = [
            models.Index(fields=['command', 'started_at'], name='sparseness_cmd_started_idx'),
        ]

    def __str__(self):
        return f"{self.command} run {self.id} - Started: {self.started_at}"

    @property
    def duration_seconds(self):
        if self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()
