# Generated by Django 4.2.11 on 2026-10-16 09:12

from django.db import migrations, models
import uuid


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunManifest',
            fields=[
                ('id', models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ('command', models.CharField(choices=[('simulate', 'Simulate'), ('measure', 'Measure'), ('regress', 'Regress'), ('validate', 'Validate')], max_length=20)),
                ('schema_version', models.PositiveIntegerField(default=1)),
                ('tool_version', models.CharField(max_length=32)),
                ('config', models.JSONField(blank=True, default=dict, help_text='Echo of the effective configuration')),
                ('inputs', models.JSONField(blank=True, default=dict, help_text='Input path -> sha256 digest')),
                ('outputs', models.JSONField(blank=True, default=dict, help_text='Output path -> sha256 digest')),
                ('warnings', models.JSONField(blank=True, default=list)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('exit_code', models.SmallIntegerField(default=0)),
                ('started_at', models.DateTimeField()),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-started_at'],
                'indexes': [models.Index(fields=['command', 'started_at'], name='sparseness_cmd_started_idx')],
            },
        ),
    ]
