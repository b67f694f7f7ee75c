# Generated by Django 4.2.16 on 2026-10-18 09:12

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Campaign',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('title', models.CharField(db_index=True, max_length=150)),
                ('slug', models.SlugField(max_length=150, unique=True)),
                ('scenarios', models.CharField(blank=True, max_length=500)),
                ('seed', models.BigIntegerField(default=0)),
                ('config', models.JSONField(blank=True, default=dict)),
                ('date_run', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-date_run'],
            },
        ),
        migrations.CreateModel(
            name='ShotRecord',
            fields=[
                ('id', models.AutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('scenario', models.CharField(db_index=True, max_length=100)),
                ('stage', models.PositiveIntegerField()),
                ('freq_mhz', models.FloatField()),
                ('input_bit', models.PositiveSmallIntegerField()),
                ('objective', models.CharField(max_length=50)),
                ('power_pct', models.FloatField()),
                ('duration_ns', models.FloatField()),
                ('phase_ns', models.FloatField()),
                ('n_faults', models.PositiveIntegerField()),
                ('fault_class', models.CharField(choices=[('NoInjection', 'No Injection'), ('Masked', 'Masked'), ('TransientBitSet', 'Bit Set'), ('TransientBitReset', 'Bit Reset'), ('StuckAt', 'Stuck At'), ('Permanent', 'Permanent'), ('Mixed', 'Mixed')], max_length=20)),
                ('burst_len', models.PositiveIntegerField(default=0)),
                ('repeatability', models.FloatField()),
                ('campaign', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='shots', to='faultsim.campaign')),
            ],
            options={
                'ordering': ['campaign', 'scenario', 'freq_mhz', 'input_bit', 'objective', 'duration_ns', 'power_pct'],
            },
        ),
    ]
